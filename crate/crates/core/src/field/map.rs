use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::geometry::CapacitorGeometry;
use super::solver::Lattice;
use crate::{Error, Result};

/// Solved potential and field magnitude on the lattice.
#[derive(Clone, Debug)]
pub struct FieldMap {
    pub geometry: CapacitorGeometry,
    pub lattice: Lattice,
    /// Volts, indexed by [`Lattice::index`].
    pub potential: Vec<f64>,
    /// |E| in V/cm, same indexing.
    pub field: Vec<f64>,
    /// One entry per nested level, coarsest first; the last is this map.
    pub levels: Vec<LevelSummary>,
}

/// Outcome of one level of the nested solve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub spacing_mm: f64,
    pub iterations: usize,
    pub central_field_v_per_cm: f64,
}

/// Coordinate plane of a CSV slice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SlicePlane {
    /// Constant y, spanning x and z.
    Xz,
    /// Constant z, spanning x and y.
    Xy,
}

impl FieldMap {
    pub(crate) fn from_potential(geometry: CapacitorGeometry, lattice: Lattice, potential: Vec<f64>) -> Self {
        let field = (0..lattice.len()).map(|g| node_field(&lattice, &potential, g)).collect();
        FieldMap { geometry, lattice, potential, field, levels: Vec::new() }
    }

    /// Total relaxation sweeps over all levels.
    pub fn iterations(&self) -> usize {
        self.levels.iter().map(|l| l.iterations).sum()
    }

    pub fn spacing_mm(&self) -> f64 {
        self.lattice.hx
    }

    pub fn field_at(&self, x_mm: f64, y_mm: f64, z_mm: f64) -> f64 {
        self.lattice.interpolate(&self.field, x_mm, y_mm, z_mm)
    }

    pub fn potential_at(&self, x_mm: f64, y_mm: f64, z_mm: f64) -> f64 {
        self.lattice.interpolate(&self.potential, x_mm, y_mm, z_mm)
    }

    /// Field magnitude at the geometric center, V/cm.
    pub fn central_field_v_per_cm(&self) -> f64 {
        self.field_at(0.0, 0.0, 0.0)
    }

    /// Largest |E - E_center| / E_center over lattice nodes in the cube
    /// |x|, |y|, |z| <= `half_extent_mm`.
    pub fn uniformity(&self, half_extent_mm: f64) -> Result<f64> {
        self.uniformity_box([half_extent_mm; 3])
    }

    /// As [`FieldMap::uniformity`] over the box |x| <= a, |y| <= b, |z| <= c.
    pub fn uniformity_box(&self, half_extents_mm: [f64; 3]) -> Result<f64> {
        let lat = &self.lattice;
        if half_extents_mm.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::InvalidConfig(format!("region half extents {half_extents_mm:?} mm must be >= 0")));
        }
        let [rx, ry, rz] = half_extents_mm;
        let inside = |r: f64, lo: f64, h: f64, n: usize| r < -lo - h && r < lo + (n - 1) as f64 * h - h;
        if !(inside(rx, lat.x0, lat.hx, lat.nx) && inside(ry, lat.y0, lat.hy, lat.ny) && inside(rz, lat.z0, lat.hz, lat.nz)) {
            return Err(Error::InvalidConfig(format!("region {half_extents_mm:?} mm exceeds the lattice")));
        }
        let center = self.central_field_v_per_cm();
        if center == 0.0 {
            return Ok(0.0);
        }
        let tol = 1e-9;
        let range = |r: f64, lo: f64, h: f64, n: usize| (0..n).filter(move |&i| (lo + i as f64 * h).abs() <= r + tol);
        let mut worst = 0.0f64;
        for k in range(rz, lat.z0, lat.hz, lat.nz) {
            for j in range(ry, lat.y0, lat.hy, lat.ny) {
                for i in range(rx, lat.x0, lat.hx, lat.nx) {
                    let e = self.field[lat.index(i, j, k)];
                    worst = worst.max((e - center).abs() / center);
                }
            }
        }
        Ok(worst)
    }

    /// Nodes of one lattice plane through the nearest node to `at_mm`.
    pub fn write_slice_csv<W: Write>(&self, plane: SlicePlane, at_mm: f64, writer: W) -> Result<()> {
        let lat = &self.lattice;
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["x_mm", "y_mm", "z_mm", "E_V_per_cm"])?;
        let nearest = |p: f64, lo: f64, h: f64, n: usize| (((p - lo) / h).round().max(0.0) as usize).min(n - 1);
        match plane {
            SlicePlane::Xz => {
                let j = nearest(at_mm, lat.y0, lat.hy, lat.ny);
                for k in 0..lat.nz {
                    for i in 0..lat.nx {
                        self.write_node(&mut w, i, j, k)?;
                    }
                }
            }
            SlicePlane::Xy => {
                let k = nearest(at_mm, lat.z0, lat.hz, lat.nz);
                for j in 0..lat.ny {
                    for i in 0..lat.nx {
                        self.write_node(&mut w, i, j, k)?;
                    }
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    fn write_node<W: Write>(&self, w: &mut csv::Writer<W>, i: usize, j: usize, k: usize) -> Result<()> {
        let lat = &self.lattice;
        w.write_record([
            lat.x(i).to_string(),
            lat.y(j).to_string(),
            lat.z(k).to_string(),
            self.field[lat.index(i, j, k)].to_string(),
        ])?;
        Ok(())
    }

    /// |E| in the y = 0 plane as a matrix: one row per z, one column per x.
    pub fn write_grid_csv<W: Write>(&self, writer: W) -> Result<()> {
        let lat = &self.lattice;
        let j = (((0.0 - lat.y0) / lat.hy).round() as usize).min(lat.ny - 1);
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["z_mm\\x_mm".to_string()];
        header.extend((0..lat.nx).map(|i| lat.x(i).to_string()));
        w.write_record(&header)?;
        for k in 0..lat.nz {
            let mut row = vec![lat.z(k).to_string()];
            row.extend((0..lat.nx).map(|i| self.field[lat.index(i, j, k)].to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_slice(&self, plane: SlicePlane, at_mm: f64, path: &Path) -> Result<()> {
        self.write_slice_csv(plane, at_mm, std::fs::File::create(path)?)
    }

    pub fn save_grid(&self, path: &Path) -> Result<()> {
        self.write_grid_csv(std::fs::File::create(path)?)
    }
}

/// |E| at a node in V/cm: central differences inside, one-sided on the outer faces.
pub(crate) fn node_field(lat: &Lattice, v: &[f64], g: usize) -> f64 {
    let i = g % lat.nx;
    let j = (g / lat.nx) % lat.ny;
    let k = g / lat.plane();
    let ex = diff(v, g, i, lat.nx, 1, lat.hx);
    let ey = diff(v, g, j, lat.ny, lat.nx, lat.hy);
    let ez = diff(v, g, k, lat.nz, lat.plane(), lat.hz);
    10.0 * (ex * ex + ey * ey + ez * ez).sqrt()
}

fn diff(v: &[f64], g: usize, pos: usize, n: usize, stride: usize, h: f64) -> f64 {
    if n < 2 {
        0.0
    } else if pos == 0 {
        (v[g + stride] - v[g]) / h
    } else if pos == n - 1 {
        (v[g] - v[g - stride]) / h
    } else {
        (v[g + stride] - v[g - stride]) / (2.0 * h)
    }
}
