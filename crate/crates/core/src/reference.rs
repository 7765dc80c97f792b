//! Published reference values, shipped as `data/reference.json`, used to
//! diff computed tables.

use serde::{Deserialize, Serialize};

use crate::surface::SurfaceLabel;

const BUILTIN: &str = include_str!("../data/reference.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsRow {
    pub surface: SurfaceLabel,
    pub theta_degrees: f64,
    pub x_period: f64,
    pub y_period: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub courant_lower: usize,
    pub sandwich_lower: usize,
    pub sandwich_upper: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GalerkinRow {
    pub surface: SurfaceLabel,
    pub subspace_lower: Option<usize>,
    pub index_estimate: [usize; 2],
    pub m: usize,
    pub negative_range: [f64; 2],
    pub positive_six_range: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubspaceMatrix {
    pub surface: SurfaceLabel,
    pub indices: Vec<usize>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub description: String,
    pub bounds: Vec<BoundsRow>,
    pub galerkin: Vec<GalerkinRow>,
    pub subspace_matrices: Vec<SubspaceMatrix>,
}

impl Reference {
    pub fn builtin() -> Self {
        serde_json::from_str(BUILTIN).expect("built-in reference file is well formed")
    }

    pub fn bounds_row(&self, label: SurfaceLabel) -> Option<&BoundsRow> {
        self.bounds.iter().find(|r| r.surface == label)
    }

    pub fn galerkin_row(&self, label: SurfaceLabel) -> Option<&GalerkinRow> {
        self.galerkin.iter().find(|r| r.surface == label)
    }

    pub fn subspace_matrix(&self, label: SurfaceLabel) -> Option<&SubspaceMatrix> {
        self.subspace_matrices.iter().find(|r| r.surface == label)
    }
}

/// Relative difference `|computed - expected| / |expected|`.
pub fn relative_error(computed: f64, expected: f64) -> f64 {
    (computed - expected).abs() / expected.abs()
}
