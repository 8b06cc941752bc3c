//! Uniform triangulation of an interval and the element-aligned data domain.

use crate::error::{Error, Result};

/// Endpoint of the spatial domain together with its outward normal sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPoint {
    pub vertex: usize,
    pub x: f64,
    /// -1 at the left endpoint, +1 at the right one.
    pub normal: f64,
    /// Element adjacent to the point.
    pub element: usize,
    /// Reference coordinate of the point inside `element` (0 or 1).
    pub local: f64,
}

/// Uniform mesh of `[a, b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalMesh {
    a: f64,
    b: f64,
    h: f64,
    vertices: Vec<f64>,
    elements: Vec<[usize; 2]>,
    interior_facets: Vec<usize>,
    boundary: [BoundaryPoint; 2],
}

impl IntervalMesh {
    pub fn new(a: f64, b: f64, n_elems: usize) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidRange { a, b });
        }
        if n_elems == 0 {
            return Err(Error::InvalidCount { what: "element count" });
        }
        let h = (b - a) / n_elems as f64;
        let mut vertices: Vec<f64> = (0..=n_elems).map(|i| a + i as f64 * h).collect();
        // pin the right endpoint exactly
        vertices[n_elems] = b;
        let elements = (0..n_elems).map(|e| [e, e + 1]).collect();
        let interior_facets = (1..n_elems).collect();
        let boundary = [
            BoundaryPoint {
                vertex: 0,
                x: a,
                normal: -1.0,
                element: 0,
                local: 0.0,
            },
            BoundaryPoint {
                vertex: n_elems,
                x: b,
                normal: 1.0,
                element: n_elems - 1,
                local: 1.0,
            },
        ];
        Ok(Self {
            a,
            b,
            h,
            vertices,
            elements,
            interior_facets,
            boundary,
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n_elems(&self) -> usize {
        self.elements.len()
    }

    pub fn vertices(&self) -> &[f64] {
        &self.vertices
    }

    pub fn elements(&self) -> &[[usize; 2]] {
        &self.elements
    }

    /// Interior vertex indices; in 1D these are the interior facets.
    pub fn interior_facets(&self) -> &[usize] {
        &self.interior_facets
    }

    pub fn boundary_points(&self) -> &[BoundaryPoint; 2] {
        &self.boundary
    }

    /// Left endpoint of element `e`.
    pub fn element_origin(&self, e: usize) -> f64 {
        self.vertices[self.elements[e][0]]
    }

    pub fn element_length(&self, e: usize) -> f64 {
        let [l, r] = self.elements[e];
        self.vertices[r] - self.vertices[l]
    }

    /// Maps a physical coordinate to the nearest vertex index if it lies within
    /// `tol * h` of it.
    fn vertex_index(&self, x: f64, tol: f64) -> Option<usize> {
        let i = ((x - self.a) / self.h).round();
        if i < 0.0 || i > self.n_elems() as f64 {
            return None;
        }
        let i = i as usize;
        ((self.vertices[i] - x).abs() <= tol * self.h).then_some(i)
    }

    /// Marks the elements contained in the union of `intervals`.
    pub fn mark_data_domain(&self, intervals: &[[f64; 2]]) -> Result<DataDomain> {
        let mut element_mask = vec![false; self.n_elems()];
        let mut resolved = Vec::with_capacity(intervals.len());
        for &[lo, hi] in intervals {
            let lo_v = self
                .vertex_index(lo, 1e-12)
                .ok_or(Error::MisalignedDomain { x: lo })?;
            let hi_v = self
                .vertex_index(hi, 1e-12)
                .ok_or(Error::MisalignedDomain { x: hi })?;
            let (lo_v, hi_v) = (lo_v.min(hi_v), lo_v.max(hi_v));
            for flag in &mut element_mask[lo_v..hi_v] {
                *flag = true;
            }
            resolved.push([self.vertices[lo_v], self.vertices[hi_v]]);
        }
        Ok(DataDomain {
            intervals: resolved,
            element_mask,
        })
    }
}

/// Measurement set `omega` as a union of whole mesh elements.
#[derive(Debug, Clone, PartialEq)]
pub struct DataDomain {
    intervals: Vec<[f64; 2]>,
    element_mask: Vec<bool>,
}

impl DataDomain {
    pub fn intervals(&self) -> &[[f64; 2]] {
        &self.intervals
    }

    pub fn element_mask(&self) -> &[bool] {
        &self.element_mask
    }

    pub fn contains_element(&self, e: usize) -> bool {
        self.element_mask[e]
    }

    pub fn is_empty(&self) -> bool {
        !self.element_mask.iter().any(|&m| m)
    }
}
