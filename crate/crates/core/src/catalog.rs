//! The catalog of known Wente tori and their period-closing angles.
//!
//! The built-in table ships as `data/catalog.txt`; the same plain-text
//! format (`l/n theta` per line, `#` comments) can be loaded from disk to
//! add surfaces.

use std::path::Path;

use crate::error::{Error, Result};
use crate::surface::{build_for_label, SurfaceLabel, SurfaceParams};

const BUILTIN: &str = include_str!("../data/catalog.txt");

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatalogRow {
    pub label: SurfaceLabel,
    pub theta_degrees: f64,
}

impl CatalogRow {
    pub fn surface(&self, mean_curvature: f64) -> Result<SurfaceParams> {
        build_for_label(self.label, mean_curvature, self.theta_degrees)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceCatalog {
    pub rows: Vec<CatalogRow>,
}

impl SurfaceCatalog {
    pub fn builtin() -> Self {
        Self::parse(BUILTIN).expect("built-in catalog is well formed")
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut rows: Vec<CatalogRow> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Catalog { line: idx + 1, message };
            let mut fields = line.split_whitespace();
            let (Some(label), Some(theta), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(err(format!("expected `l/n theta`, got {line:?}")));
            };
            let label: SurfaceLabel = label.parse().map_err(|e: Error| err(e.to_string()))?;
            let theta_degrees: f64 = theta
                .parse()
                .map_err(|_| err(format!("bad angle {theta:?}")))?;
            if rows.iter().any(|r| r.label == label) {
                return Err(err(format!("duplicate surface {label}")));
            }
            rows.push(CatalogRow { label, theta_degrees });
        }
        Ok(Self { rows })
    }

    pub fn get(&self, label: SurfaceLabel) -> Option<&CatalogRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    pub fn labels(&self) -> impl Iterator<Item = SurfaceLabel> + '_ {
        self.rows.iter().map(|r| r.label)
    }
}

/// Hand-selected basis index sets (1-based) whose Galerkin blocks are known
/// to be negative definite, one per surface where such a set is published.
pub fn listed_subspace(label: SurfaceLabel) -> Option<Vec<usize>> {
    fn span(a: usize, b: usize) -> impl Iterator<Item = usize> {
        a..=b
    }
    let set: Vec<usize> = match (label.ell(), label.n()) {
        (3, 2) => vec![1, 2, 3, 4, 5, 7, 8, 9, 17],
        (4, 3) => span(1, 9).chain([13]).collect(),
        (5, 3) => [1, 2, 3].into_iter().chain(span(5, 9)).chain([15, 16, 17, 29]).collect(),
        (5, 4) => span(1, 23).chain(span(27, 35)).chain([45]).collect(),
        (7, 4) => [1, 2, 3]
            .into_iter()
            .chain(span(5, 9))
            .chain(span(14, 17))
            .chain([27, 28, 29, 45])
            .collect(),
        (6, 5) => span(1, 19).chain([29]).collect(),
        (7, 5) => span(1, 11)
            .chain(span(14, 19))
            .chain(span(26, 31))
            .chain([43, 44, 45, 65])
            .collect(),
        (8, 5) => span(1, 7).chain(span(10, 13)).chain([29]).collect(),
        (9, 5) => [1, 2, 3]
            .into_iter()
            .chain(span(5, 9))
            .chain(span(14, 17))
            .chain(span(26, 29))
            .chain([43, 44, 45, 65])
            .collect(),
        (8, 7) | (10, 7) | (12, 7) => span(1, 5).chain(span(10, 13)).collect(),
        _ => return None,
    };
    Some(set)
}
