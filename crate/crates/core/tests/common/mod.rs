//! Oracles shared by the integration tests.
#![allow(dead_code)]

use lockdown_core::calibration::Calibration;
use lockdown_core::control::*;
use lockdown_core::costs::{objective, running_cost, GroupCosts};
use lockdown_core::dynamics::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn random_state(rng: &mut StdRng, n: usize) -> SystemState {
    SystemState::new(
        (0..n)
            .map(|_| Compartments::from_array(std::array::from_fn(|_| rng.gen_range(0.0..0.2))))
            .collect(),
    )
}

pub fn random_adjoint(rng: &mut StdRng, n: usize, scale: f64) -> AdjointState {
    AdjointState {
        groups: (0..n)
            .map(|_| Compartments::from_array(std::array::from_fn(|_| rng.gen_range(-scale..scale))))
            .collect(),
    }
}

pub fn random_controls(rng: &mut StdRng, params: &ModelParams) -> Vec<f64> {
    params.groups.iter().map(|g| rng.gen_range(0.0..g.u_max)).collect()
}

pub fn gradient_error(cal: &Calibration, grid: TimeGrid, seed: u64) -> f64 {
    let mut rng = StdRng::seed_from_u64(seed);
    let n = cal.params.n_groups();
    let rows = (0..grid.nodes())
        .map(|_| {
            cal.params
                .groups
                .iter()
                .map(|g| rng.gen_range(0.2 * g.u_max..0.8 * g.u_max))
                .collect()
        })
        .collect();
    let sched = ControlSchedule::from_nodes(rows).unwrap();
    let j = |s: &ControlSchedule| {
        let traj = integrate_forward(&cal.initial, s, &cal.params, &grid).unwrap();
        objective(&traj, s, &cal.costs, &cal.params).unwrap()
    };
    let traj = integrate_forward(&cal.initial, &sched, &cal.params, &grid).unwrap();
    let adj = integrate_backward(&traj, &sched, &cal.params, &cal.costs, AdjointForm::Coupled).unwrap();
    let grad = control_gradient(&traj, &adj, &sched, &cal.params, &cal.costs);

    let eps = 1e-6 * cal.params.groups[0].u_max;
    let mut worst: f64 = 0.0;
    let mut norm: f64 = 0.0;
    for k in 0..grid.nodes() {
        for p in 0..n {
            let mut up = sched.clone();
            up.at_mut(k)[p] += eps;
            let mut down = sched.clone();
            down.at_mut(k)[p] -= eps;
            let fd = (j(&up) - j(&down)) / (2.0 * eps);
            worst = worst.max((fd - grad[k][p]).abs());
            norm = norm.max(fd.abs());
        }
    }
    worst / norm
}

/// Every 3-node schedule on the quantized control lattice.
pub fn enumerate_best(cal: &Calibration, grid: &TimeGrid, quantum: f64) -> Vec<f64> {
    let u_max = cal.params.groups[0].u_max;
    let levels: Vec<f64> = (0..)
        .map(|j| j as f64 * quantum)
        .take_while(|u| *u <= u_max + 1e-12)
        .collect();
    let mut best = (f64::INFINITY, vec![]);
    for &a in &levels {
        for &b in &levels {
            for &c in &levels {
                let sched = ControlSchedule::from_nodes(vec![vec![a], vec![b], vec![c]]).unwrap();
                let traj = integrate_forward(&cal.initial, &sched, &cal.params, grid).unwrap();
                let j = objective(&traj, &sched, &cal.costs, &cal.params).unwrap();
                // strict improvement keeps the smallest control among ties
                if j < best.0 - 1e-12 * j.abs() {
                    best = (j, vec![a, b, c]);
                }
            }
        }
    }
    best.1
}

pub fn toy_calibration() -> Calibration {
    let mut cal = lockdown_core::calibration::build_experiment2().unwrap().with_lockdown_bound(0.5);
    cal.params.groups[0].gamma = 0.0;
    cal.params.population = 1.0;
    cal.costs.population = 1.0;
    cal.costs.groups[0] = GroupCosts {
        treatment: 40.0,
        productivity: 0.0,
        quarantine: 5.0,
        death: 100.0,
        recovery_profit: 0.0,
    };
    cal.initial.groups[0] = Compartments {
        s: 0.7,
        i: 0.3,
        ..Compartments::ZERO
    };
    cal
}

/// Worst `|H - (L + <lambda, f>)|` over `samples` random inputs, relative to the
/// sum of the magnitudes of the terms involved.
pub fn hamiltonian_identity_error(cal: &Calibration, samples: usize, seed: u64) -> f64 {
    let mut rng = StdRng::seed_from_u64(seed);
    let n = cal.params.n_groups();
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let x = random_state(&mut rng, n);
        let l = random_adjoint(&mut rng, n, 1e9);
        let u = random_controls(&mut rng, &cal.params);
        let f = derivative(&x, &u, &cal.params).unwrap();
        let lhs = hamiltonian(&x, &l, &u, &cal.params, &cal.costs);
        let cost = running_cost(&x, &u, &cal.costs, &cal.params);
        let rhs = cost + l.pair(&f);
        let scale = cost.abs()
            + l.groups
                .iter()
                .zip(&f.groups)
                .map(|(a, b)| {
                    a.to_array().iter().zip(b.to_array()).map(|(p, q)| (p * q).abs()).sum::<f64>()
                })
                .sum::<f64>();
        if scale > 0.0 {
            worst = worst.max((lhs - rhs).abs() / scale);
        }
    }
    worst
}
