mod common;

use common::*;
use lockdown_core::calibration::{build_experiment1, build_experiment2, Calibration};
use lockdown_core::control::*;
use lockdown_core::costs::{running_cost, CostModel, CostShape, GroupCosts};
use lockdown_core::dynamics::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn exp1() -> Calibration {
    build_experiment1().unwrap()
}

#[test]
fn hamiltonian_of_zero_inputs_is_zero() {
    let c = exp1();
    let h = hamiltonian(
        &SystemState::zeros(3),
        &AdjointState::zeros(3),
        &[0.0; 3],
        &c.params,
        &c.costs,
    );
    assert_eq!(h, 0.0);
}

#[test]
fn hamiltonian_with_zero_adjoint_is_running_cost() {
    let c = exp1();
    let mut rng = StdRng::seed_from_u64(7);
    for _ in 0..20 {
        let x = random_state(&mut rng, 3);
        let u = random_controls(&mut rng, &c.params);
        let h = hamiltonian(&x, &AdjointState::zeros(3), &u, &c.params, &c.costs);
        assert_eq!(h, running_cost(&x, &u, &c.costs, &c.params));
    }
}

#[test]
fn hamiltonian_is_cost_plus_costate_pairing() {
    for shape in [CostShape::Convex, CostShape::Concave] {
        let worst = hamiltonian_identity_error(&exp1().with_shape(shape), 1000, 11);
        assert!(worst <= 1e-12, "{shape:?}: {worst:e}");
    }
}

/// Central finite difference of H with respect to compartment `c` of group `p`.
fn dh_fd(
    x: &SystemState,
    l: &AdjointState,
    u: &[f64],
    cal: &Calibration,
    p: usize,
    c: usize,
) -> f64 {
    let eps = 1e-6;
    let bump = |sign: f64| {
        let mut y = x.clone();
        let mut v = y.groups[p].to_array();
        v[c] += sign * eps;
        y.groups[p] = Compartments::from_array(v);
        hamiltonian(&y, l, u, &cal.params, &cal.costs)
    };
    (bump(1.0) - bump(-1.0)) / (2.0 * eps)
}

#[test]
fn adjoint_rates_match_finite_differences_of_h() {
    let mut rng = StdRng::seed_from_u64(3);
    for shape in [CostShape::Convex, CostShape::Concave] {
        let cal = exp1().with_shape(shape);
        let config = SolverConfig {
            grid: TimeGrid::new(60.0, 0.5).unwrap(),
            ..SolverConfig::default()
        };
        let solved = solve_fbsm(&cal.initial, &cal.params, &cal.costs, &config).unwrap();
        for _ in 0..10 {
            let k = rng.gen_range(0..config.grid.nodes());
            let x = &solved.trajectory.states[k];
            let l = &solved.adjoint.states[k];
            let u = solved.schedule.at(k);
            let rate = adjoint_derivative(x, l, u, &cal.params, &cal.costs);
            let scale = rate
                .groups
                .iter()
                .flat_map(|g| g.to_array())
                .fold(0.0f64, |m, v| m.max(v.abs()));
            for p in 0..3 {
                for c in 0..6 {
                    let fd = -dh_fd(x, l, u, &cal, p, c);
                    let analytic = rate.groups[p].to_array()[c];
                    assert!(
                        (fd - analytic).abs() <= 1e-6 * analytic.abs().max(1e-3 * scale),
                        "group {p} component {c}: fd {fd} vs {analytic}"
                    );
                }
            }
        }
    }
}

#[test]
fn decoupled_form_is_not_the_gradient() {
    let cal = exp1();
    let mut rng = StdRng::seed_from_u64(5);
    let x = random_state(&mut rng, 3);
    let l = random_adjoint(&mut rng, 3, 1e9);
    let u = random_controls(&mut rng, &cal.params);
    let coupled = adjoint_derivative(&x, &l, &u, &cal.params, &cal.costs);
    let decoupled = adjoint_derivative_with(&x, &l, &u, &cal.params, &cal.costs, AdjointForm::Decoupled);
    let fd = -dh_fd(&x, &l, &u, &cal, 0, 2);
    assert!((coupled.groups[0].a - fd).abs() <= 1e-6 * fd.abs());
    assert!((decoupled.groups[0].a - fd).abs() > 1e-3 * fd.abs());
    // the S, Q, R, D rates do not involve the cross-group sum
    for p in 0..3 {
        assert_eq!(coupled.groups[p].s, decoupled.groups[p].s);
        assert_eq!(coupled.groups[p].d, decoupled.groups[p].d);
    }
}

#[test]
fn quarantined_and_dead_costates_are_constant() {
    let mut rng = StdRng::seed_from_u64(9);
    let cal = exp1();
    for _ in 0..200 {
        let x = random_state(&mut rng, 3);
        let l = random_adjoint(&mut rng, 3, 1e8);
        let u = random_controls(&mut rng, &cal.params);
        let rate = adjoint_derivative(&x, &l, &u, &cal.params, &cal.costs);
        for g in &rate.groups {
            assert_eq!(g.q, 0.0);
            assert_eq!(g.d, 0.0);
        }
    }
}

fn zero_costs(cal: &Calibration) -> CostModel {
    CostModel {
        groups: vec![
            GroupCosts {
                treatment: 0.0,
                productivity: 0.0,
                quarantine: 0.0,
                death: 0.0,
                recovery_profit: 0.0,
            };
            cal.params.n_groups()
        ],
        ..cal.costs.clone()
    }
}

#[test]
fn zero_costs_give_zero_adjoint() {
    let cal = exp1();
    let costs = zero_costs(&cal);
    let mut rng = StdRng::seed_from_u64(1);
    let x = random_state(&mut rng, 3);
    let rate = adjoint_derivative(&x, &AdjointState::zeros(3), &[0.01; 3], &cal.params, &costs);
    assert!(rate.groups.iter().all(|g| g.to_array() == [0.0; 6]));

    let grid = TimeGrid::new(30.0, 0.1).unwrap();
    let sched = ControlSchedule::zeros(&grid, 3);
    let traj = integrate_forward(&cal.initial, &sched, &cal.params, &grid).unwrap();
    let adj = integrate_backward(&traj, &sched, &cal.params, &costs, AdjointForm::Coupled).unwrap();
    assert!(adj
        .states
        .iter()
        .all(|l| l.groups.iter().all(|g| g.to_array() == [0.0; 6])));
}

#[test]
fn backward_integration_terminal_conditions_and_constants() {
    let cal = exp1();
    let grid = TimeGrid::new(365.0, 0.1).unwrap();
    let sched = ControlSchedule::zeros(&grid, 3);
    let traj = integrate_forward(&cal.initial, &sched, &cal.params, &grid).unwrap();
    let adj = integrate_backward(&traj, &sched, &cal.params, &cal.costs, AdjointForm::Coupled).unwrap();
    let last = adj.states.last().unwrap();
    for (l, c) in last.groups.iter().zip(&cal.costs.groups) {
        assert_eq!([l.s, l.q, l.a, l.i, l.r], [0.0; 5]);
        assert_eq!(l.d, cal.costs.population * c.death);
    }
    for l in &adj.states {
        for (g, c) in l.groups.iter().zip(&cal.costs.groups) {
            assert_eq!(g.q, 0.0);
            assert_eq!(g.d, cal.costs.population * c.death);
        }
    }
    let short = ControlSchedule::zeros(&TimeGrid::new(1.0, 0.1).unwrap(), 3);
    assert!(integrate_backward(&traj, &short, &cal.params, &cal.costs, AdjointForm::Coupled).is_err());
}

/// `||g_adj - g_fd||_inf / ||g_fd||_inf` on a 10-step grid.
#[test]
fn adjoint_gradient_matches_finite_differences() {
    // Ten steps; fine enough that the costate's O(h²) error stays well
    // below the tolerance after the cancellation inside ∂H/∂u.
    let grid = TimeGrid::new(1.0, 0.1).unwrap();
    for shape in [CostShape::Convex, CostShape::Concave] {
        let targeted = gradient_error(&exp1().with_shape(shape), grid, 21);
        let uniform = gradient_error(&build_experiment2().unwrap().with_shape(shape), grid, 22);
        assert!(targeted < 1e-3, "{shape:?} targeted: {targeted:e}");
        assert!(uniform < 1e-3, "{shape:?} uniform: {uniform:e}");
    }
}

#[test]
fn pointwise_control_examples() {
    let params = ModelParams {
        beta: 0.3,
        population: 1.0,
        groups: vec![GroupParams {
            id: GroupId::Aggregate,
            gamma: 0.0,
            alpha: 0.5,
            k: 0.2,
            sigma: 0.1,
            mu: 0.01,
            population_share: 1.0,
            u_max: 1.0,
        }],
    };
    let mut cost = CostModel {
        population: 1.0,
        shape: CostShape::Convex,
        concave_exponent: 0.5,
        groups: vec![GroupCosts {
            treatment: 1.0,
            productivity: 0.0,
            quarantine: 1.0,
            death: 0.0,
            recovery_profit: 0.0,
        }],
    };
    let x = SystemState::new(vec![Compartments {
        s: 0.8,
        i: 0.2,
        ..Compartments::ZERO
    }]);
    let with_phi = |phi: f64| AdjointState {
        groups: vec![Compartments {
            s: phi,
            ..Compartments::ZERO
        }],
    };

    assert_eq!(optimal_control_pointwise(&x, &with_phi(0.0), &params, &cost), vec![0.0]);
    assert_eq!(optimal_control_pointwise(&x, &with_phi(1e6), &params, &cost), vec![1.0]);

    // grid-search oracle for u -> Z ES (u + gamma)^2 S - phi u S
    let phi = 0.5;
    let best = (0..=1_000_000)
        .map(|j| j as f64 * 1e-6)
        .map(|u| (u, u * u * x.groups[0].s - phi * u * x.groups[0].s))
        .fold((0.0, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b })
        .0;
    let u = optimal_control_pointwise(&x, &with_phi(phi), &params, &cost)[0];
    assert!((u - 0.25).abs() < 1e-12);
    assert!((u - best).abs() <= 1e-6);

    // no susceptibles, no control
    let empty = SystemState::new(vec![Compartments {
        i: 1.0,
        ..Compartments::ZERO
    }]);
    assert_eq!(optimal_control_pointwise(&empty, &with_phi(1e6), &params, &cost), vec![0.0]);

    // concave: sqrt(1) - phi * 1 <= 0 exactly at phi = 1, which picks u_max
    cost.shape = CostShape::Concave;
    assert_eq!(optimal_control_pointwise(&x, &with_phi(1.0), &params, &cost), vec![1.0]);
    assert_eq!(
        optimal_control_pointwise(&x, &with_phi(1.0 - 1e-12), &params, &cost),
        vec![0.0]
    );
}

#[test]
fn prohibitive_quarantine_cost_gives_no_lockdown() {
    let mut cal = exp1();
    for g in &mut cal.costs.groups {
        g.quarantine = 1e15;
    }
    let solved = solve_fbsm(&cal.initial, &cal.params, &cal.costs, &SolverConfig::default()).unwrap();
    assert!(solved.schedule.rows().iter().flatten().all(|&u| u < 1e-9));
}

#[test]
fn non_convergence_carries_history() {
    let cal = exp1();
    let config = SolverConfig {
        max_iterations: 3,
        grid: TimeGrid::new(100.0, 0.5).unwrap(),
        ..SolverConfig::default()
    };
    match solve_fbsm(&cal.initial, &cal.params, &cal.costs, &config) {
        Err(lockdown_core::Error::NotConverged { iterations, history, .. }) => {
            assert_eq!(iterations, 3);
            assert_eq!(history.len(), 3);
        }
        other => panic!("expected non-convergence, got {other:?}"),
    }
}

#[test]
fn solver_config_is_validated() {
    let cal = exp1();
    for config in [
        SolverConfig {
            relaxation: 0.0,
            ..SolverConfig::default()
        },
        SolverConfig {
            relaxation: 1.5,
            ..SolverConfig::default()
        },
        SolverConfig {
            tolerance: 0.0,
            ..SolverConfig::default()
        },
    ] {
        assert!(solve_fbsm(&cal.initial, &cal.params, &cal.costs, &config).is_err());
    }
}

#[test]
fn toy_sweep_matches_exhaustive_enumeration() {
    let cal = toy_calibration();
    let grid = TimeGrid::new(2.0, 1.0).unwrap();
    let config = SolverConfig {
        grid,
        ..SolverConfig::default()
    };
    let solved = solve_fbsm(&cal.initial, &cal.params, &cal.costs, &config).unwrap();
    let best = enumerate_best(&cal, &grid, 0.05);
    let swept: Vec<f64> = solved.schedule.group_series(0);
    // the last sample never acts on J, so any value is optimal there
    for k in 0..2 {
        assert!(
            (swept[k] - best[k]).abs() <= 0.05 + 1e-12,
            "node {k}: sweep {swept:?} vs enumeration {best:?}"
        );
    }
    assert!(swept[0] > 0.05, "fixture should exercise an interior optimum: {swept:?}");
}
