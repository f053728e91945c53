//! JSON exchange records. Block pairs are 1-based here; complex numbers are
//! split into `re`/`im` fields, never strings. Unknown fields are rejected.

use serde::{Deserialize, Serialize};

use crate::blockcert::BlockSpec;
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, Tolerance, C64, ONE};
use crate::maps::{default_antisymmetric_unitary, MapSpec};
use crate::pairs::PairTable;

/// One phase `z_ij` for the block pair `i < j` (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseEntry {
    pub i: usize,
    pub j: usize,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

pub fn phases_to_entries(z: &PairTable<C64>) -> Vec<PhaseEntry> {
    z.iter().map(|(i, j, v)| PhaseEntry { i: i + 1, j: j + 1, re: v.re, im: v.im }).collect()
}

/// Missing pairs default to 1; duplicates and out-of-range pairs are errors.
pub fn phases_from_entries(n: usize, entries: &[PhaseEntry]) -> Result<PairTable<C64>> {
    let mut table = PairTable::filled(n, ONE);
    let mut seen = PairTable::filled(n, false);
    for e in entries {
        if e.i < 1 || e.i >= e.j || e.j > n {
            return Err(Error::InvalidMapSpec(format!("phase entry ({}, {}) must satisfy 1 <= i < j <= {n}", e.i, e.j)));
        }
        let (i, j) = (e.i - 1, e.j - 1);
        if std::mem::replace(seen.get_mut(i, j), true) {
            return Err(Error::InvalidMapSpec(format!("phase entry ({}, {}) given twice", e.i, e.j)));
        }
        *table.get_mut(i, j) = C64::new(e.re, e.im);
    }
    Ok(table)
}

/// Flat description of a [`MapSpec`]. `z` defaults to all ones and `u` to
/// the standard antisymmetric unitary `1_K (x) [[0, 1], [-1, 0]]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpecRecord {
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<Vec<PhaseEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<ComplexMatrix>,
}

impl From<MapSpec> for MapSpecRecord {
    fn from(spec: MapSpec) -> Self {
        let family = spec.family().to_string();
        let (n, k, z, u) = match spec {
            MapSpec::Reduction { n } => (Some(n), None, None, None),
            MapSpec::GeneralizedReduction { n, z } | MapSpec::ComplexRobertsonExtension { n, z } => {
                (Some(n), None, Some(phases_to_entries(&z)), None)
            }
            MapSpec::Robertson => (None, None, None, None),
            MapSpec::GeneralizedRobertson { k, u } => (None, Some(k), None, Some(u)),
            MapSpec::NewFamily { n, k, z, u } => (Some(n), Some(k), Some(phases_to_entries(&z)), Some(u)),
        };
        Self { family, n, k, z, u }
    }
}

impl TryFrom<MapSpecRecord> for MapSpec {
    type Error = Error;

    fn try_from(r: MapSpecRecord) -> Result<Self> {
        let need = |v: Option<usize>, name: &str| {
            v.ok_or_else(|| Error::InvalidMapSpec(format!("family `{}` needs `{name}`", r.family)))
        };
        let forbid = |present: bool, name: &str| -> Result<()> {
            if present {
                return Err(Error::InvalidMapSpec(format!("family `{}` does not take `{name}`", r.family)));
            }
            Ok(())
        };
        let phases = |n: usize| phases_from_entries(n, r.z.as_deref().unwrap_or(&[]));
        let unitary = |k: usize| match &r.u {
            Some(u) => Ok(u.clone()),
            None => default_antisymmetric_unitary(2 * k),
        };
        let spec = match r.family.as_str() {
            "reduction" => {
                forbid(r.k.is_some(), "k")?;
                forbid(r.z.is_some(), "z")?;
                forbid(r.u.is_some(), "u")?;
                MapSpec::Reduction { n: need(r.n, "n")? }
            }
            "generalized-reduction" => {
                forbid(r.k.is_some(), "k")?;
                forbid(r.u.is_some(), "u")?;
                let n = need(r.n, "n")?;
                MapSpec::GeneralizedReduction { n, z: phases(n)? }
            }
            "robertson" => {
                forbid(r.n.is_some(), "n")?;
                forbid(r.k.is_some(), "k")?;
                forbid(r.z.is_some(), "z")?;
                forbid(r.u.is_some(), "u")?;
                MapSpec::Robertson
            }
            "generalized-robertson" => {
                forbid(r.n.is_some(), "n")?;
                forbid(r.z.is_some(), "z")?;
                let k = need(r.k, "k")?;
                MapSpec::GeneralizedRobertson { k, u: unitary(k)? }
            }
            "complex-robertson" => {
                forbid(r.k.is_some(), "k")?;
                forbid(r.u.is_some(), "u")?;
                let n = need(r.n, "n")?;
                MapSpec::ComplexRobertsonExtension { n, z: phases(n)? }
            }
            "new" => {
                let n = need(r.n, "n")?;
                let k = need(r.k, "k")?;
                MapSpec::NewFamily { n, k, z: phases(n)?, u: unitary(k)? }
            }
            other => return Err(Error::InvalidMapSpec(format!("unknown family `{other}`"))),
        };
        spec.validate(&Tolerance::default())?;
        Ok(spec)
    }
}

/// Off-diagonal block `M_ij` (1-based, `i < j`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockEntry {
    pub i: usize,
    pub j: usize,
    pub matrix: ComplexMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockSpecRecord {
    pub alphas: Vec<f64>,
    #[serde(default)]
    pub z: Vec<PhaseEntry>,
    pub blocks: Vec<BlockEntry>,
    pub diag_blocks: Vec<ComplexMatrix>,
}

impl From<&BlockSpec> for BlockSpecRecord {
    fn from(spec: &BlockSpec) -> Self {
        Self {
            alphas: spec.alphas().to_vec(),
            z: phases_to_entries(spec.z()),
            blocks: spec.blocks().iter().map(|(i, j, m)| BlockEntry { i: i + 1, j: j + 1, matrix: m.clone() }).collect(),
            diag_blocks: spec.diag_blocks().to_vec(),
        }
    }
}

impl BlockSpecRecord {
    pub fn into_spec(self, tol: &Tolerance) -> Result<BlockSpec> {
        let n = self.alphas.len();
        if n == 0 {
            return Err(Error::InvalidBlockSpec("at least one block is required".into()));
        }
        let z = phases_from_entries(n, &self.z).map_err(|e| Error::InvalidBlockSpec(e.to_string()))?;
        let mut slots: PairTable<Option<ComplexMatrix>> = PairTable::from_fn(n, |_, _| None);
        for b in self.blocks {
            if b.i < 1 || b.i >= b.j || b.j > n {
                return Err(Error::InvalidBlockSpec(format!("block ({}, {}) must satisfy 1 <= i < j <= {n}", b.i, b.j)));
            }
            if slots.get_mut(b.i - 1, b.j - 1).replace(b.matrix).is_some() {
                return Err(Error::InvalidBlockSpec(format!("block ({}, {}) given twice", b.i, b.j)));
            }
        }
        let mut missing = Vec::new();
        for (i, j, m) in slots.iter() {
            if m.is_none() {
                missing.push(format!("({}, {})", i + 1, j + 1));
            }
        }
        if !missing.is_empty() {
            return Err(Error::InvalidBlockSpec(format!("missing off-diagonal blocks {}", missing.join(", "))));
        }
        let blocks = slots.map(|_, _, m| m.clone().expect("checked above"));
        BlockSpec::new(self.alphas, z, blocks, self.diag_blocks, tol)
    }
}

impl Serialize for BlockSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        BlockSpecRecord::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for BlockSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        BlockSpecRecord::deserialize(d)?.into_spec(&Tolerance::default()).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blockcert::recipes::{random_instance, PhaseMode};
    use crate::linalg::{rng_from_seed, sigma_y};

    #[test]
    fn map_spec_round_trip() {
        let specs = [
            MapSpec::Reduction { n: 3 },
            MapSpec::GeneralizedReduction { n: 3, z: PairTable::from_fn(3, |i, j| C64::new(0.5, 0.1 * (i + j) as f64)) },
            MapSpec::Robertson,
            MapSpec::GeneralizedRobertson { k: 1, u: sigma_y() },
            MapSpec::ComplexRobertsonExtension { n: 2, z: PairTable::filled(2, C64::new(0.0, 1.0)) },
            MapSpec::new_family(3, 2, PairTable::filled(3, ONE)).unwrap(),
        ];
        for spec in specs {
            let text = serde_json::to_string(&spec).unwrap();
            let back: MapSpec = serde_json::from_str(&text).unwrap();
            assert_eq!(back, spec, "{text}");
        }
    }

    #[test]
    fn map_spec_defaults_and_strictness() {
        let s: MapSpec = serde_json::from_str(r#"{"family":"new","n":2,"k":1}"#).unwrap();
        assert_eq!(s, MapSpec::new_family(2, 1, PairTable::filled(2, ONE)).unwrap());
        let z: MapSpec = serde_json::from_str(r#"{"family":"new","n":3,"k":1,"z":[{"i":1,"j":3,"re":0,"im":1}]}"#).unwrap();
        assert_eq!(*z.phases().unwrap().get(0, 2), C64::new(0.0, 1.0));
        assert_eq!(*z.phases().unwrap().get(0, 1), ONE);
        for bad in [
            r#"{"family":"new","n":2,"k":1,"extra":1}"#,
            r#"{"family":"robertson","n":2}"#,
            r#"{"family":"mystery"}"#,
            r#"{"family":"reduction"}"#,
            r#"{"family":"new","n":2,"k":1,"z":[{"i":2,"j":1,"re":1}]}"#,
            r#"{"family":"new","n":2,"k":1,"z":[{"i":1,"j":2,"re":2}]}"#,
        ] {
            assert!(serde_json::from_str::<MapSpec>(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn block_spec_round_trip() {
        let mut rng = rng_from_seed(11);
        let tol = Tolerance::default();
        let spec = random_instance(&mut rng, 3, 2, PhaseMode::Disk, &tol).unwrap();
        let text = serde_json::to_string(&spec).unwrap();
        let back: BlockSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn block_spec_missing_block() {
        let text = r#"{"alphas":[0.5,0.5],"blocks":[],"diag_blocks":[
            {"rows":1,"cols":1,"re":[0.5],"im":[0.0]},{"rows":1,"cols":1,"re":[0.5],"im":[0.0]}]}"#;
        let err = serde_json::from_str::<BlockSpec>(text).unwrap_err().to_string();
        assert!(err.contains("missing"), "{err}");
    }
}
