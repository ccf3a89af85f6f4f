use thermistor_fem::fem::{coupling_matrix, elasticity_matrix, joule_load, stiffness_matrix, Assembler};
use thermistor_fem::metrics::{max_error_over_time, Norms};
use thermistor_fem::stepper::{implicit_euler_step, Operators};
use thermistor_fem::{make_problem1, run_simulation, Error, RunConfig, Scheme, StepperConfig, VoigtTensor};

#[test]
fn picard_converges_on_problem1_with_k_twice_h_squared() {
    let traj = run_simulation(
        &make_problem1(),
        16,
        128,
        &RunConfig::with_scheme(Scheme::ImplicitEuler),
    )
    .unwrap();
    assert_eq!(traj.picard_iterations.len(), 128);
    let worst = *traj.picard_iterations.iter().max().unwrap();
    assert!(worst <= 50, "{worst}");
}

#[test]
fn coarse_steps_need_relaxation() {
    let spec = make_problem1();
    let mesh = thermistor_fem::Mesh::crisscross(8).unwrap();
    let ops = Operators::new(&mesh, &spec, 1.0 / 32.0, 1e-10).unwrap();
    let state = ops.initial_state().unwrap();
    let plain = StepperConfig {
        picard_min_relaxation: 1.0,
        ..StepperConfig::with_scheme(Scheme::ImplicitEuler)
    };
    match implicit_euler_step(&state, &ops, ops.time_of(1, 32), &plain) {
        Err(Error::PicardDivergence { iterations, .. }) => assert_eq!(iterations, 50),
        other => panic!("expected divergence, got {:?}", other.map(|r| r.1)),
    }
    let relaxed = StepperConfig::with_scheme(Scheme::ImplicitEuler);
    let (next, iterations) = implicit_euler_step(&state, &ops, ops.time_of(1, 32), &relaxed).unwrap();
    assert!(iterations < 50);
    assert!(next.theta.iter().all(|v| v.is_finite()));
}

#[test]
fn schemes_agree_within_discretization_error() {
    let spec = make_problem1();
    let reference = run_simulation(
        &spec,
        32,
        512,
        &RunConfig {
            stride: Some(4),
            ..Default::default()
        },
    )
    .unwrap();
    let semi = run_simulation(&spec, 16, 128, &RunConfig::default()).unwrap();
    let ie = run_simulation(&spec, 16, 128, &RunConfig::with_scheme(Scheme::ImplicitEuler)).unwrap();
    let err = max_error_over_time(&semi, &reference).unwrap();
    let gap = max_error_over_time(&semi, &ie).unwrap();
    for (g, e) in [
        (gap.theta_l2, err.theta_l2),
        (gap.phi_l2, err.phi_l2),
        (gap.u_l2, err.u_l2),
    ] {
        assert!(g <= 10.0 * e, "scheme gap {g:e} vs discretization error {e:e}");
    }
}

#[test]
fn error_norms_agree_with_coarse_mesh_evaluation() {
    // Recompute the error with the 3-point edge-midpoint rule of the nx = 8
    // triangles. Every coarse midpoint is a vertex of the nx = 32 mesh, so the
    // reference is read off exactly and no transfer operator is involved.
    let spec = make_problem1();
    let run = RunConfig {
        stride: Some(16),
        ..RunConfig::with_scheme(Scheme::ImplicitEuler)
    };
    let reference = run_simulation(&spec, 32, 512, &run).unwrap();
    let coarse = run_simulation(&spec, 8, 32, &RunConfig::default()).unwrap();
    let report = max_error_over_time(&coarse, &reference).unwrap();

    let cm = &coarse.mesh;
    let fm = &reference.mesh;
    let find = |p: [f64; 2]| {
        fm.vertices()
            .iter()
            .position(|q| (q[0] - p[0]).abs() < 1e-12 && (q[1] - p[1]).abs() < 1e-12)
            .expect("nested point")
    };
    // (triangle area, [(coarse local vertex pair, fine vertex)] per midpoint)
    let rule: Vec<(f64, [([usize; 2], usize); 3])> = (0..cm.num_triangles())
        .map(|t| {
            let tri = cm.triangles()[t];
            let mids = cm.edge_midpoints(t);
            let edge = |m: [f64; 2]| {
                let c = cm.triangle_coords(t);
                let mut pair = [0, 0];
                'outer: for a in 0..3 {
                    for b in a + 1..3 {
                        let mid = [(c[a][0] + c[b][0]) / 2.0, (c[a][1] + c[b][1]) / 2.0];
                        if (mid[0] - m[0]).abs() < 1e-12 && (mid[1] - m[1]).abs() < 1e-12 {
                            pair = [tri[a], tri[b]];
                            break 'outer;
                        }
                    }
                }
                (pair, find(m))
            };
            (cm.signed_area(t).abs(), [edge(mids[0]), edge(mids[1]), edge(mids[2])])
        })
        .collect();
    let l2 = |coarse_field: &[f64], fine_field: &[f64], comps: usize| -> f64 {
        let mut sum = 0.0;
        for (area, pts) in &rule {
            for &([a, b], j) in pts {
                for c in 0..comps {
                    let ch = 0.5 * (coarse_field[comps * a + c] + coarse_field[comps * b + c]);
                    let d = ch - fine_field[comps * j + c];
                    sum += area / 3.0 * d * d;
                }
            }
        }
        sum.sqrt()
    };
    let (mut theta, mut phi, mut u) = (0.0f64, 0.0f64, 0.0f64);
    for s in coarse.snapshots.iter().skip(1) {
        let r = reference.snapshot(s.n * 16).unwrap();
        assert_eq!(r.n, s.n * 16);
        theta = theta.max(l2(&s.theta, &r.theta, 1));
        phi = phi.max(l2(&s.phi, &r.phi, 1));
        u = u.max(l2(&s.u, &r.u, 2));
    }
    for (fine, coarse) in [(report.theta_l2, theta), (report.phi_l2, phi), (report.u_l2, u)] {
        assert!((fine - coarse).abs() <= 0.15 * fine, "{fine:e} vs {coarse:e}");
    }
}

#[test]
fn steady_state_satisfies_stationary_equations() {
    let mut spec = make_problem1();
    spec.material.viscosity = VoigtTensor::lame(1.0, 1.0).unwrap();
    spec.material.elasticity = VoigtTensor::lame(1.0, 1.0).unwrap();
    spec.t_final = 40.0;
    let nt = 400;
    let traj = run_simulation(&spec, 8, nt, &RunConfig::default()).unwrap();
    let mesh = &traj.mesh;
    let norms = Norms::new(mesh);
    let tail = &traj.snapshots[traj.snapshots.len() - 11..];
    for w in tail.windows(2) {
        let d: Vec<f64> = w[1].theta.iter().zip(&w[0].theta).map(|(a, b)| a - b).collect();
        let du: Vec<f64> = w[1].u.iter().zip(&w[0].u).map(|(a, b)| a - b).collect();
        assert!(norms.l2(&d).unwrap() < 1e-12 && norms.l2_vector(&du).unwrap() < 1e-12);
    }
    let s = tail.last().unwrap();
    let sigma = spec.material.conductivity;
    let interior = |r: &mut Vec<f64>, comps: usize| {
        for &b in mesh.boundary_vertices() {
            for c in 0..comps {
                r[comps * b + c] = 0.0;
            }
        }
        r.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    };

    let joule = joule_load(mesh, &s.theta, &s.phi, |t| sigma.eval(t));
    let k = stiffness_matrix(mesh, &vec![1.0; mesh.num_triangles()]).unwrap();
    let mut heat: Vec<f64> = k.matvec(&s.theta).iter().zip(&joule).map(|(a, b)| a - b).collect();
    let scale = joule.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(interior(&mut heat, 1) <= 1e-8 * scale);

    let weights = Assembler::new(mesh).conductivity_weights(&s.theta, |t| sigma.eval(t));
    let mut potential = stiffness_matrix(mesh, &weights).unwrap().matvec(&s.phi);
    assert!(interior(&mut potential, 1) <= 1e-8 * 5.0);

    let thermal = coupling_matrix(mesh, &spec.material.expansion).matvec_transpose(&s.theta);
    let kb = elasticity_matrix(mesh, &spec.material.elasticity);
    let mut stress: Vec<f64> = kb.matvec(&s.u).iter().zip(&thermal).map(|(a, b)| a - b).collect();
    let scale = thermal.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(interior(&mut stress, 2) <= 1e-8 * scale);
}
