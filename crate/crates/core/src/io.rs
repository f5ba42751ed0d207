//! JSON formats for metric fields and isometry descriptions.
//!
//! Field file:
//! `{"n": 2, "grid": [4, 4], "background": "euclidean" | [[packed]...], "values": [[packed] | "tip", ...]}`
//! with vertices in row-major grid order and packed upper triangles
//! (`[a11, a12, a22]` for `n = 2`).
//!
//! Isometry file:
//! `{"diffeo": {"matrix": [[ints]], "shift": [ints]} | null, "section": [{"A": [[reals]], "invert": bool}...] | "identity"}`.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cone::{ConePoint, FiberIsometry};
use crate::error::{GeomError, Result};
use crate::fields::{DiscreteManifold, MetricField};
use crate::isometry::{torus_affine_diffeo, DiffeoAction, EbinIsometry, FiberSection};
use crate::spd::{Matrix, SpdMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Euclidean {
    Euclidean,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tip {
    Tip,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Identity {
    Identity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BackgroundSpec {
    Named(Euclidean),
    PerVertex(Vec<Vec<f64>>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ValueSpec {
    Tip(Tip),
    Packed(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldFile {
    pub n: usize,
    pub grid: Vec<usize>,
    pub background: BackgroundSpec,
    pub values: Vec<ValueSpec>,
}

fn parse_err(e: impl std::fmt::Display) -> GeomError {
    GeomError::Parse(e.to_string())
}

impl FieldFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(parse_err)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| GeomError::Parse(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("field files always serialize")
    }

    /// The manifold described by `n`, `grid` and `background`.
    pub fn manifold(&self) -> Result<DiscreteManifold> {
        if self.grid.len() != self.n {
            return Err(GeomError::Parse(format!(
                "grid has rank {} but n = {}",
                self.grid.len(),
                self.n
            )));
        }
        match &self.background {
            BackgroundSpec::Named(Euclidean::Euclidean) => DiscreteManifold::torus_euclidean(&self.grid),
            BackgroundSpec::PerVertex(list) => {
                let bgs = list
                    .iter()
                    .enumerate()
                    .map(|(v, p)| {
                        SpdMatrix::from_packed(self.n, p.clone()).map_err(|e| GeomError::BadBackground {
                            vertex: v,
                            reason: e.to_string(),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                DiscreteManifold::torus_from_backgrounds(&self.grid, bgs)
            }
        }
    }

    /// Values placed on `manifold`, which must match this file's descriptor.
    pub fn field_on(&self, manifold: Arc<DiscreteManifold>) -> Result<MetricField> {
        if manifold.n() != self.n || manifold.grid().map(|g| g.dims()) != Some(&self.grid[..]) {
            return Err(GeomError::ManifoldMismatch);
        }
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(v, spec)| match spec {
                ValueSpec::Tip(Tip::Tip) => ConePoint::tip(self.n),
                ValueSpec::Packed(p) => SpdMatrix::from_packed(self.n, p.clone())
                    .map(|x| ConePoint::from_spd(&x))
                    .map_err(|e| GeomError::Parse(format!("value at vertex {v}: {e}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        MetricField::new(manifold, values).map_err(parse_err)
    }

    pub fn to_field(&self) -> Result<MetricField> {
        self.field_on(Arc::new(self.manifold()?))
    }

    pub fn from_field(f: &MetricField) -> Result<Self> {
        let man = f.manifold();
        let grid = man
            .grid()
            .ok_or_else(|| GeomError::InvalidInput("only torus fields can be written".into()))?
            .dims()
            .to_vec();
        let n = man.n();
        let id = SpdMatrix::identity(n)?;
        let backgrounds = man.backgrounds();
        let background = if backgrounds.iter().all(|g| *g == id) {
            BackgroundSpec::Named(Euclidean::Euclidean)
        } else {
            BackgroundSpec::PerVertex(backgrounds.iter().map(|g| g.as_sym().packed().to_vec()).collect())
        };
        let values = f
            .values()
            .iter()
            .map(|c| {
                if c.is_tip() {
                    Ok(ValueSpec::Tip(Tip::Tip))
                } else {
                    Ok(ValueSpec::Packed(c.to_spd()?.as_sym().packed().to_vec()))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FieldFile { n, grid, background, values })
    }
}

/// Reads two field files and places both on one manifold.
pub fn read_field_pair(a: &FieldFile, b: &FieldFile) -> Result<(MetricField, MetricField)> {
    let man_a = a.manifold()?;
    let man_b = b.manifold()?;
    if a.grid != b.grid || !man_a.same_as(&man_b) {
        return Err(GeomError::ManifoldMismatch);
    }
    let man = Arc::new(man_a);
    Ok((a.field_on(Arc::clone(&man))?, b.field_on(man)?))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffeoSpec {
    pub matrix: Vec<Vec<i64>>,
    pub shift: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsoSpec {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    pub invert: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SectionSpec {
    Named(Identity),
    PerVertex(Vec<IsoSpec>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsometryFile {
    pub diffeo: Option<DiffeoSpec>,
    pub section: SectionSpec,
}

fn dense(rows: &[Vec<f64>], n: usize) -> Result<Matrix> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(GeomError::Parse(format!("expected a {n}x{n} matrix")));
    }
    Ok(Matrix::from_fn(n, n, |i, j| rows[i][j]))
}

impl IsometryFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(parse_err)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| GeomError::Parse(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("isometry files always serialize")
    }

    pub fn to_isometry(&self, manifold: Arc<DiscreteManifold>) -> Result<EbinIsometry> {
        let n = manifold.n();
        let verts = manifold.vertex_count();
        let diffeo = match &self.diffeo {
            None => DiffeoAction::identity(verts, n),
            Some(spec) => {
                let grid = manifold
                    .grid()
                    .ok_or_else(|| GeomError::InvalidInput("diffeo needs a torus grid".into()))?;
                torus_affine_diffeo(grid, &spec.matrix, &spec.shift)?
            }
        };
        let section = match &self.section {
            SectionSpec::Named(Identity::Identity) => FiberSection::identity(verts, n)?,
            SectionSpec::PerVertex(list) => {
                if list.len() != verts {
                    return Err(GeomError::Parse(format!(
                        "section has {} entries for {verts} vertices",
                        list.len()
                    )));
                }
                let isos = list
                    .iter()
                    .enumerate()
                    .map(|(v, s)| {
                        FiberIsometry::new(dense(&s.a, n)?, s.invert)
                            .map_err(|e| GeomError::Parse(format!("section at vertex {v}: {e}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                FiberSection::new(isos)?
            }
        };
        EbinIsometry::new(manifold, section, diffeo)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::ebin_distance;

    #[test]
    fn field_round_trip() {
        let text = r#"{"n":2,"grid":[2,2],"background":"euclidean",
            "values":[[1,0,1],[4,0,4],"tip",[2,0.5,1]]}"#;
        let file = FieldFile::from_json(text).unwrap();
        let f = file.to_field().unwrap();
        assert!(f.value(2).is_tip());
        let back = FieldFile::from_field(&f).unwrap();
        assert_eq!(back.background, BackgroundSpec::Named(Euclidean::Euclidean));
        let g = FieldFile::from_json(&back.to_json()).unwrap().to_field().unwrap();
        assert!(ebin_distance(&f, &g).unwrap() < 1e-12);
    }

    #[test]
    fn per_vertex_background() {
        let text = r#"{"n":2,"grid":[2,2],"background":[[1,0,1],[2,0,2],[1,0,1],[1,0.1,1]],
            "values":[[1,0,1],[1,0,1],[1,0,1],[1,0,1]]}"#;
        let f = FieldFile::from_json(text).unwrap().to_field().unwrap();
        assert!((f.manifold().weight(1) - 0.5).abs() < 1e-15);
        let back = FieldFile::from_field(&f).unwrap();
        assert!(matches!(back.background, BackgroundSpec::PerVertex(_)));
    }

    #[test]
    fn field_errors() {
        assert!(matches!(FieldFile::from_json("{"), Err(GeomError::Parse(_))));
        assert!(matches!(
            FieldFile::from_json(r#"{"n":2,"grid":[2,2],"background":"round","values":[]}"#),
            Err(GeomError::Parse(_))
        ));
        let short = FieldFile::from_json(r#"{"n":2,"grid":[2,2],"background":"euclidean","values":[[1,0,1]]}"#)
            .unwrap();
        assert!(short.to_field().is_err());
        let bad_bg = FieldFile::from_json(
            r#"{"n":2,"grid":[2,2],"background":[[1,0,1],[1,0,1],[1,0,-1],[1,0,1]],"values":[]}"#,
        )
        .unwrap();
        assert!(matches!(bad_bg.manifold(), Err(GeomError::BadBackground { vertex: 2, .. })));
        let rank = FieldFile::from_json(r#"{"n":3,"grid":[2,2],"background":"euclidean","values":[]}"#).unwrap();
        assert!(rank.manifold().is_err());
    }

    #[test]
    fn pair_mismatch() {
        let a = FieldFile::from_json(
            r#"{"n":2,"grid":[2,2],"background":"euclidean","values":[[1,0,1],[1,0,1],[1,0,1],[1,0,1]]}"#,
        )
        .unwrap();
        let mut b = a.clone();
        b.background = BackgroundSpec::PerVertex(vec![vec![1.0, 0.0, 1.0], vec![2.0, 0.0, 2.0], vec![1.0, 0.0, 1.0], vec![1.0, 0.0, 1.0]]);
        assert_eq!(read_field_pair(&a, &b).unwrap_err(), GeomError::ManifoldMismatch);
        assert!(read_field_pair(&a, &a.clone()).is_ok());
    }

    #[test]
    fn isometry_file() {
        let man = Arc::new(DiscreteManifold::torus_euclidean(&[4, 4]).unwrap());
        let iso = IsometryFile::from_json(r#"{"diffeo":{"matrix":[[1,1],[0,1]],"shift":[1,0]},"section":"identity"}"#)
            .unwrap()
            .to_isometry(Arc::clone(&man))
            .unwrap();
        assert_eq!(iso.diffeo().perm().len(), 16);

        let rows = (0..16)
            .map(|_| r#"{"A":[[0.6,-0.8],[0.8,0.6]],"invert":true}"#)
            .collect::<Vec<_>>()
            .join(",");
        let text = format!(r#"{{"diffeo":null,"section":[{rows}]}}"#);
        let file = IsometryFile::from_json(&text).unwrap();
        assert!(file.to_isometry(Arc::clone(&man)).unwrap().is_pure_section(1e-12));
        assert_eq!(IsometryFile::from_json(&file.to_json()).unwrap(), file);

        let bad = IsometryFile::from_json(r#"{"diffeo":null,"section":[{"A":[[2,0],[0,2]],"invert":false}]}"#).unwrap();
        assert!(bad.to_isometry(Arc::clone(&man)).is_err());
        let cat_map =
            IsometryFile::from_json(r#"{"diffeo":{"matrix":[[2,1],[1,1]],"shift":[0,0]},"section":"identity"}"#)
                .unwrap();
        assert!(cat_map.to_isometry(man).is_ok());
        assert!(IsometryFile::from_json(r#"{"diffeo":null}"#).is_err());
    }
}
