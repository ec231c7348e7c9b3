use rbstark::field::{solve_laplace_with, tilt_sensitivity, CapacitorGeometry, SlicePlane, SolverOptions};
use rbstark::par::ExecMode;

/// Plates eight gaps wide: the center should see the ideal V/l.
fn wide_plates() -> (CapacitorGeometry, SolverOptions) {
    let g = CapacitorGeometry {
        plate_x_mm: 8.0,
        plate_y_mm: 8.0,
        gap_mm: 1.0,
        hole_diameter_mm: 2.0,
        voltage_v: 10.0,
        ..Default::default()
    };
    let o = SolverOptions { spacing_mm: 0.05, box_margin_gaps: 1.0, tolerance: 1e-10, ..Default::default() };
    (g, o)
}

#[test]
fn wide_plates_approach_the_parallel_plate_limit() {
    let (g, o) = wide_plates();
    let map = solve_laplace_with(&g, &o).unwrap();
    let ideal = g.nominal_field_v_per_cm();
    let e = map.central_field_v_per_cm();
    assert!(((e - ideal) / ideal).abs() < 1e-3, "{e} vs {ideal}");
    // Linear potential across the gap at the center.
    for z in [-0.25, 0.0, 0.25] {
        let v = map.potential_at(0.0, 0.0, z);
        assert!((v - g.voltage_v * (z + 0.5)).abs() < 1e-3 * g.voltage_v, "V({z}) = {v}");
    }
    let small = map.uniformity(0.1).unwrap();
    let large = map.uniformity(0.4).unwrap();
    assert!(small <= large && large < 0.01, "{small} {large}");
}

#[test]
fn sequential_and_parallel_sweeps_agree_exactly() {
    let (mut g, o) = wide_plates();
    g.plate_x_mm = 3.0;
    g.plate_y_mm = 4.0;
    let par = solve_laplace_with(&g, &SolverOptions { mode: ExecMode::Parallel, ..o }).unwrap();
    let seq = solve_laplace_with(&g, &SolverOptions { mode: ExecMode::Sequential, ..o }).unwrap();
    assert_eq!(par.potential, seq.potential);
}

#[test]
fn larger_box_barely_moves_the_center() {
    let g = CapacitorGeometry {
        plate_x_mm: 4.0,
        plate_y_mm: 6.0,
        gap_mm: 2.0,
        hole_diameter_mm: 2.0,
        voltage_v: 100.0,
        ..Default::default()
    };
    let o = SolverOptions { spacing_mm: 0.1, box_margin_gaps: 1.5, tolerance: 1e-10, ..Default::default() };
    let near = solve_laplace_with(&g, &o).unwrap().central_field_v_per_cm();
    let far = solve_laplace_with(&g, &SolverOptions { box_margin_gaps: 3.0, ..o }).unwrap().central_field_v_per_cm();
    assert!(((far - near) / near).abs() < 2e-4, "{near} vs {far}");
}

#[test]
fn tilt_effect_is_small_and_even() {
    let g = CapacitorGeometry {
        plate_x_mm: 4.0,
        plate_y_mm: 6.0,
        gap_mm: 2.0,
        hole_diameter_mm: 2.0,
        voltage_v: 100.0,
        ..Default::default()
    };
    let o = SolverOptions { spacing_mm: 0.1, box_margin_gaps: 1.0, tolerance: 1e-10, ..Default::default() };
    assert_eq!(tilt_sensitivity(&g, 0.0, &o).unwrap(), 0.0);
    let plus = tilt_sensitivity(&g, 15.0, &o).unwrap();
    let minus = tilt_sensitivity(&g, -15.0, &o).unwrap();
    assert!(plus.abs() < 1e-3);
    assert!((plus - minus).abs() < 1e-9 + 1e-6 * plus.abs(), "{plus} vs {minus}");
    assert!(tilt_sensitivity(&g, 61.0, &o).is_err());
}

#[test]
fn slices_cover_one_lattice_plane() {
    let (mut g, mut o) = wide_plates();
    g.plate_x_mm = 2.0;
    g.plate_y_mm = 3.0;
    g.hole_diameter_mm = 1.0;
    o.spacing_mm = 0.05;
    let map = solve_laplace_with(&g, &o).unwrap();
    let lat = map.lattice;

    let mut buf = Vec::new();
    map.write_slice_csv(SlicePlane::Xz, 0.0, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next(), Some("x_mm,y_mm,z_mm,E_V_per_cm"));
    assert_eq!(text.lines().count(), lat.nx * lat.nz + 1);
    let second: Vec<f64> = text.lines().nth(1).unwrap().split(',').map(|s| s.parse().unwrap()).collect();
    assert!(second[1].abs() < 1e-12);

    let mut buf = Vec::new();
    map.write_grid_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), lat.nz + 1);
    assert_eq!(text.lines().next().unwrap().split(',').count(), lat.nx + 1);
}
