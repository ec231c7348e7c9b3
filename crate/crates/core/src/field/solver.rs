use serde::{Deserialize, Serialize};

use super::geometry::CapacitorGeometry;
use super::map::{node_field, FieldMap, LevelSummary};
use crate::par::{self, ExecMode};
use crate::{Error, Result};

const FREE: u8 = 0;
const FIXED: u8 = 1;
const IRREGULAR: u8 = 2;

/// Knobs of the finite-difference relaxation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub spacing_mm: f64,
    /// Stop once the largest update of a full sweep, relative to |V|, drops below this.
    pub tolerance: f64,
    /// Distance from the plates to the grounded box, in gap lengths.
    pub box_margin_gaps: f64,
    pub max_iterations: usize,
    /// Start from the interpolated solution on successively coarser grids.
    pub nested: bool,
    #[serde(skip)]
    pub mode: ExecMode,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            spacing_mm: 0.25,
            tolerance: 1e-8,
            box_margin_gaps: 3.0,
            max_iterations: 50_000,
            nested: true,
            mode: ExecMode::default(),
        }
    }
}

/// Uniform lattice with the plates on z planes.
///
/// x and y use the requested spacing and are symmetric about zero; z uses
/// the nearest spacing that divides the gap, so both untilted plates sit
/// exactly on lattice planes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lattice {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub hx: f64,
    pub hy: f64,
    pub hz: f64,
    pub x0: f64,
    pub y0: f64,
    pub z0: f64,
    /// Plane index of the bottom plate; the top one is `k_bottom + gap_cells`.
    pub k_bottom: usize,
    pub gap_cells: usize,
}

impl Lattice {
    pub fn new(geometry: &CapacitorGeometry, spacing_mm: f64, box_margin_gaps: f64) -> Self {
        let l = geometry.gap_mm;
        let margin = box_margin_gaps * l;
        let half = |extent: f64| ((extent / 2.0 + margin) / spacing_mm - 1e-9).ceil() as usize;
        let (hx_n, hy_n) = (half(geometry.plate_x_mm), half(geometry.plate_y_mm));
        let gap_cells = ((l / spacing_mm).round() as usize).max(1);
        let hz = l / gap_cells as f64;
        let below = (margin / hz - 1e-9).ceil() as usize;
        Lattice {
            nx: 2 * hx_n + 1,
            ny: 2 * hy_n + 1,
            nz: 2 * below + gap_cells + 1,
            hx: spacing_mm,
            hy: spacing_mm,
            hz,
            x0: -(hx_n as f64) * spacing_mm,
            y0: -(hy_n as f64) * spacing_mm,
            z0: -l / 2.0 - below as f64 * hz,
            k_bottom: below,
            gap_cells,
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn plane(&self) -> usize {
        self.nx * self.ny
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.ny + j) * self.nx + i
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.hx
    }

    pub fn y(&self, j: usize) -> f64 {
        self.y0 + j as f64 * self.hy
    }

    pub fn z(&self, k: usize) -> f64 {
        self.z0 + k as f64 * self.hz
    }

    /// Trilinear interpolation of a node-valued array; points outside are clamped.
    pub fn interpolate(&self, data: &[f64], x: f64, y: f64, z: f64) -> f64 {
        self.interpolate_with(x, y, z, |g| data[g])
    }

    /// Trilinear interpolation of node values given by `value(index)`.
    pub fn interpolate_with(&self, x: f64, y: f64, z: f64, value: impl Fn(usize) -> f64) -> f64 {
        let locate = |p: f64, p0: f64, h: f64, n: usize| {
            let t = ((p - p0) / h).clamp(0.0, (n - 1) as f64);
            let i = (t.floor() as usize).min(n.saturating_sub(2));
            (i, t - i as f64)
        };
        let (i, fx) = locate(x, self.x0, self.hx, self.nx);
        let (j, fy) = locate(y, self.y0, self.hy, self.ny);
        let (k, fz) = locate(z, self.z0, self.hz, self.nz);
        let mut acc = 0.0;
        for (dk, wz) in [(0, 1.0 - fz), (1, fz)] {
            for (dj, wy) in [(0, 1.0 - fy), (1, fy)] {
                for (di, wx) in [(0, 1.0 - fx), (1, fx)] {
                    let w = wx * wy * wz;
                    if w != 0.0 {
                        acc += w * value(self.index(i + di, j + dj, k + dk));
                    }
                }
            }
        }
        acc
    }
}

/// Node next to the tilted sheet: z links that cross it end on the sheet.
#[derive(Clone, Copy, Debug)]
struct Irregular {
    index: usize,
    d_up: f64,
    d_down: f64,
    up: Option<f64>,
    down: Option<f64>,
}

struct Problem {
    lattice: Lattice,
    kind: Vec<u8>,
    dirichlet: Vec<f64>,
    irregular: Vec<Irregular>,
}

fn build_problem(geometry: &CapacitorGeometry, lattice: Lattice) -> Problem {
    let lat = lattice;
    let mut kind = vec![FREE; lat.len()];
    let mut dirichlet = vec![0.0; lat.len()];
    for k in 0..lat.nz {
        for j in 0..lat.ny {
            for i in 0..lat.nx {
                if i == 0 || j == 0 || k == 0 || i == lat.nx - 1 || j == lat.ny - 1 || k == lat.nz - 1 {
                    kind[lat.index(i, j, k)] = FIXED;
                }
            }
        }
    }
    let eps = 1e-9 * lat.hx;
    let on_plate = |i: usize, j: usize| {
        lat.x(i).abs() <= geometry.plate_x_mm / 2.0 + eps && lat.y(j).abs() <= geometry.plate_y_mm / 2.0 + eps
    };
    let mut irregular = Vec::new();
    let (v_bottom, v_top) = geometry.plate_potentials();
    let tan = geometry.tilt_rad().tan();
    let snap = 1e-9 * lat.hz;
    for j in 0..lat.ny {
        for i in 0..lat.nx {
            if !on_plate(i, j) {
                continue;
            }
            let b = lat.index(i, j, lat.k_bottom);
            kind[b] = FIXED;
            dirichlet[b] = v_bottom;

            let s = geometry.gap_mm / 2.0 + lat.x(i) * tan;
            let kf = (s - lat.z0) / lat.hz;
            let k = kf.floor() as usize;
            let below = s - lat.z(k);
            let above = lat.z(k + 1) - s;
            if below <= snap || above <= snap {
                let kk = if below <= snap { k } else { k + 1 };
                let t = lat.index(i, j, kk);
                kind[t] = FIXED;
                dirichlet[t] = v_top;
                continue;
            }
            let lo = lat.index(i, j, k);
            let hi = lat.index(i, j, k + 1);
            kind[lo] = IRREGULAR;
            kind[hi] = IRREGULAR;
            irregular.push(Irregular { index: lo, d_up: below, d_down: lat.hz, up: Some(v_top), down: None });
            irregular.push(Irregular { index: hi, d_up: lat.hz, d_down: above, up: None, down: Some(v_top) });
        }
    }
    irregular.sort_by_key(|r| r.index);
    Problem { lattice, kind, dirichlet, irregular }
}

fn relaxation_factor(lat: &Lattice) -> f64 {
    let (cx, cy, cz) = (1.0 / (lat.hx * lat.hx), 1.0 / (lat.hy * lat.hy), 1.0 / (lat.hz * lat.hz));
    let c = |n: usize| (std::f64::consts::PI / (n - 1) as f64).cos();
    let rho = (cx * c(lat.nx) + cy * c(lat.ny) + cz * c(lat.nz)) / (cx + cy + cz);
    2.0 / (1.0 + (1.0 - rho * rho).sqrt())
}

/// Checkerboard split of a node array: each colour stored densely.
///
/// Row `(j, k)` of colour `c` holds the nodes `i = 2t + off` with
/// `off = (c + j + k) % 2`. Seen from a node at slot `t`, the other colour
/// sits at slots `t + off - 1` and `t + off` in the same row, and at slot
/// `t` in the four rows above, below, north and south.
struct Checker {
    half: usize,
    plane: usize,
}

impl Checker {
    fn new(lat: &Lattice) -> Self {
        let half = lat.nx.div_ceil(2);
        Checker { half, plane: half * lat.ny }
    }

    fn len(&self, lat: &Lattice) -> usize {
        self.plane * lat.nz
    }

    fn split<T: Copy + Default>(&self, lat: &Lattice, full: &[T]) -> [Vec<T>; 2] {
        let mut out = [vec![T::default(); self.len(lat)], vec![T::default(); self.len(lat)]];
        for k in 0..lat.nz {
            for j in 0..lat.ny {
                for i in 0..lat.nx {
                    let c = (i + j + k) % 2;
                    out[c][(k * lat.ny + j) * self.half + i / 2] = full[lat.index(i, j, k)];
                }
            }
        }
        out
    }

    fn merge(&self, lat: &Lattice, parts: &[Vec<f64>; 2]) -> Vec<f64> {
        let mut full = vec![0.0; lat.len()];
        for k in 0..lat.nz {
            for j in 0..lat.ny {
                for i in 0..lat.nx {
                    let c = (i + j + k) % 2;
                    full[lat.index(i, j, k)] = parts[c][(k * lat.ny + j) * self.half + i / 2];
                }
            }
        }
        full
    }
}

/// Irregular node addressed by its slot in the dense colour arrays.
#[derive(Clone, Copy, Debug)]
struct IrregularSlot {
    colour: usize,
    j: usize,
    t: usize,
    off: usize,
    node: Irregular,
}

/// One colour sweep over the dense colour arrays; returns the largest update.
///
/// `free[t]` is 1 for nodes with the regular stencil and 0 otherwise, which
/// keeps the inner loop branch-free; irregular nodes are updated afterwards.
#[allow(clippy::too_many_arguments)]
fn colour_pass(
    lat: &Lattice,
    checker: &Checker,
    colour: usize,
    omega: f64,
    free: &[u8],
    irregular: &[Vec<IrregularSlot>],
    dst: &mut [f64],
    src: &[f64],
    mode: ExecMode,
) -> f64 {
    let (cx, cy, cz) = (1.0 / (lat.hx * lat.hx), 1.0 / (lat.hy * lat.hy), 1.0 / (lat.hz * lat.hz));
    let inv_diag = 1.0 / (2.0 * (cx + cy + cz));
    let (nx, half, plane) = (lat.nx, checker.half, checker.plane);
    let per_plane = par::for_chunks_mut(mode, dst, plane, |k, out| {
        if k == 0 || k == lat.nz - 1 {
            return 0.0f64;
        }
        let mut max_delta = 0.0f64;
        for j in 1..lat.ny - 1 {
            let off = (colour + j + k) % 2;
            let row = (k * lat.ny + j) * half;
            let t0 = 1 - off;
            let n = (nx - 2 - off) / 2 + 1 - t0;
            let west = &src[row + t0 + off - 1..][..n];
            let east = &src[row + t0 + off..][..n];
            let north = &src[row + half + t0..][..n];
            let south = &src[row - half + t0..][..n];
            let up = &src[row + plane + t0..][..n];
            let down = &src[row - plane + t0..][..n];
            let mask = &free[row + t0..][..n];
            let cur = &mut out[j * half + t0..][..n];
            for q in 0..n {
                let gs = (cx * (west[q] + east[q]) + cy * (north[q] + south[q]) + cz * (up[q] + down[q])) * inv_diag;
                let delta = omega * f64::from(mask[q]) * (gs - cur[q]);
                cur[q] += delta;
                let d = delta.abs();
                max_delta = if d > max_delta { d } else { max_delta };
            }
        }
        for slot in irregular[k].iter().filter(|s| s.colour == colour) {
            let (j, t, off, r) = (slot.j, slot.t, slot.off, &slot.node);
            let row = (k * lat.ny + j) * half;
            let lateral = cx * (src[row + t + off - 1] + src[row + t + off]) + cy * (src[row + half + t] + src[row - half + t]);
            let span = r.d_up + r.d_down;
            let a_up = 2.0 / (r.d_up * span);
            let a_down = 2.0 / (r.d_down * span);
            let u = r.up.unwrap_or(src[row + plane + t]);
            let d = r.down.unwrap_or(src[row - plane + t]);
            let gs = (lateral + a_up * u + a_down * d) / (2.0 * (cx + cy) + a_up + a_down);
            let cur = &mut out[j * half + t];
            let delta = omega * (gs - *cur);
            *cur += delta;
            max_delta = max_delta.max(delta.abs());
        }
        max_delta
    });
    per_plane.into_iter().fold(0.0, f64::max)
}

fn relax(problem: &Problem, initial: Vec<f64>, scale: f64, options: &SolverOptions) -> Result<(Vec<f64>, usize)> {
    let lat = &problem.lattice;
    let omega = relaxation_factor(lat);
    let checker = Checker::new(lat);
    let free_full: Vec<u8> = problem.kind.iter().map(|&k| u8::from(k == FREE)).collect();
    let free = checker.split(lat, &free_full);
    drop(free_full);
    let mut irregular = vec![Vec::new(); lat.nz];
    for r in &problem.irregular {
        let i = r.index % lat.nx;
        let j = (r.index / lat.nx) % lat.ny;
        let k = r.index / lat.plane();
        let colour = (i + j + k) % 2;
        let off = (colour + j + k) % 2;
        irregular[k].push(IrregularSlot { colour, j, t: (i - off) / 2, off, node: *r });
    }
    let [mut red, mut black] = checker.split(lat, &initial);
    drop(initial);
    let mut last = f64::INFINITY;
    for it in 1..=options.max_iterations {
        let d0 = colour_pass(lat, &checker, 0, omega, &free[0], &irregular, &mut red, &black, options.mode);
        let d1 = colour_pass(lat, &checker, 1, omega, &free[1], &irregular, &mut black, &red, options.mode);
        last = d0.max(d1) / scale;
        if last < options.tolerance {
            return Ok((checker.merge(lat, &[red, black]), it));
        }
    }
    Err(Error::NotConverged { iterations: options.max_iterations, residual: last })
}

fn check(geometry: &CapacitorGeometry, options: &SolverOptions, max_tilt: f64) -> Result<()> {
    geometry.validate_with_tilt_bound(max_tilt)?;
    let h = options.spacing_mm;
    if !(h.is_finite() && h > 0.0 && h <= geometry.gap_mm / 20.0 + 1e-12) {
        return Err(Error::InvalidConfig(format!(
            "spacing {h} mm must be in (0, l/20 = {:.4} mm]",
            geometry.gap_mm / 20.0
        )));
    }
    if !(options.tolerance.is_finite() && options.tolerance > 0.0) {
        return Err(Error::InvalidConfig(format!("tolerance {} must be > 0", options.tolerance)));
    }
    if !(options.box_margin_gaps.is_finite() && options.box_margin_gaps >= 1.0) {
        return Err(Error::InvalidConfig("grounded box must sit at least one gap from the plates".into()));
    }
    Ok(())
}

/// Spacings of the nested solve, coarsest first, ending at the requested one.
fn level_spacings(geometry: &CapacitorGeometry, options: &SolverOptions) -> Vec<f64> {
    let mut levels = vec![options.spacing_mm];
    if options.nested {
        while levels[0] * 2.0 <= geometry.gap_mm / 5.0 {
            levels.insert(0, levels[0] * 2.0);
        }
    }
    levels
}

pub(crate) fn solve_unchecked(geometry: &CapacitorGeometry, options: &SolverOptions) -> Result<FieldMap> {
    let levels = level_spacings(geometry, options);
    let scale = geometry.voltage_v.abs();
    let mut previous: Option<(Lattice, Vec<f64>)> = None;
    let mut summaries = Vec::with_capacity(levels.len());
    for &h in &levels {
        let lattice = Lattice::new(geometry, h, options.box_margin_gaps);
        let problem = build_problem(geometry, lattice);
        if scale == 0.0 {
            return Ok(FieldMap::from_potential(*geometry, lattice, vec![0.0; lattice.len()]));
        }
        let mut initial = problem.dirichlet.clone();
        for k in 0..lattice.nz {
            for j in 0..lattice.ny {
                for i in 0..lattice.nx {
                    let g = lattice.index(i, j, k);
                    if problem.kind[g] == FIXED {
                        continue;
                    }
                    initial[g] = match &previous {
                        Some((coarse, v)) => coarse.interpolate(v, lattice.x(i), lattice.y(j), lattice.z(k)),
                        None => 0.0,
                    };
                }
            }
        }
        drop(previous.take());
        let (v, iterations) = relax(&problem, initial, scale, options)?;
        summaries.push(LevelSummary {
            spacing_mm: h,
            iterations,
            central_field_v_per_cm: lattice.interpolate_with(0.0, 0.0, 0.0, |g| node_field(&lattice, &v, g)),
        });
        previous = Some((lattice, v));
    }
    let (lattice, v) = previous.expect("at least one level");
    let mut map = FieldMap::from_potential(*geometry, lattice, v);
    map.levels = summaries;
    Ok(map)
}

/// Solves Laplace's equation for the capacitor inside a grounded box.
pub fn solve_laplace(geometry: &CapacitorGeometry, spacing_mm: f64, tolerance: f64) -> Result<FieldMap> {
    solve_laplace_with(geometry, &SolverOptions { spacing_mm, tolerance, ..Default::default() })
}

pub fn solve_laplace_with(geometry: &CapacitorGeometry, options: &SolverOptions) -> Result<FieldMap> {
    check(geometry, options, super::geometry::MAX_VALIDATED_TILT_ARCMIN)?;
    solve_unchecked(geometry, options)
}

/// Relative change of the central field caused by tilting the top plate,
/// compared with the untilted plates at the same central gap.
pub fn tilt_sensitivity(geometry: &CapacitorGeometry, tilt_arcmin: f64, options: &SolverOptions) -> Result<f64> {
    if !(tilt_arcmin.is_finite() && tilt_arcmin.abs() <= 60.0) {
        return Err(Error::InvalidConfig(format!("tilt {tilt_arcmin}' exceeds 60'")));
    }
    let flat = CapacitorGeometry { tilt_arcmin: 0.0, ..*geometry };
    let tilted = CapacitorGeometry { tilt_arcmin, ..*geometry };
    check(&flat, options, 60.0)?;
    check(&tilted, options, 60.0)?;
    if tilt_arcmin == 0.0 {
        return Ok(0.0);
    }
    let e0 = solve_unchecked(&flat, options)?.central_field_v_per_cm();
    if e0 == 0.0 {
        return Ok(0.0);
    }
    let e1 = solve_unchecked(&tilted, options)?.central_field_v_per_cm();
    Ok((e1 - e0) / e0)
}
