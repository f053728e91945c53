//! Storage for quantities indexed by unordered pairs `i < j`.

/// Values attached to the pairs `0 <= i < j < n`, stored row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct PairTable<T> {
    n: usize,
    values: Vec<T>,
}

impl<T> PairTable<T> {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut values = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                values.push(f(i, j));
            }
        }
        Self { n, values }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        assert!(i < j && j < self.n, "pair ({i}, {j}) invalid for n = {}", self.n);
        // rows 0..i contribute (n-1) + (n-2) + ... + (n-i) entries
        i * (2 * self.n - i - 1) / 2 + (j - i - 1)
    }

    /// Value for the pair `(i, j)`; panics unless `i < j < n`.
    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.values[self.slot(i, j)]
    }

    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut T {
        let s = self.slot(i, j);
        &mut self.values[s]
    }

    /// Iterates `(i, j, value)` in row-major pair order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, &T)> {
        let n = self.n;
        (0..n)
            .flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
            .zip(self.values.iter())
            .map(|((i, j), v)| (i, j, v))
    }

    pub fn map<U>(&self, mut f: impl FnMut(usize, usize, &T) -> U) -> PairTable<U> {
        PairTable::from_fn(self.n, |i, j| f(i, j, self.get(i, j)))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl<T: Clone> PairTable<T> {
    pub fn filled(n: usize, value: T) -> Self {
        Self::from_fn(n, |_, _| value.clone())
    }
}
