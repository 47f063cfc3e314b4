use std::f64::consts::PI;

use gpe_semiclassical::packet::sigma_period;
use gpe_semiclassical::*;
use num_complex::Complex64;
use proptest::prelude::*;

fn natural(g: f64) -> PhysParams {
    PhysParams::natural(g).unwrap()
}

fn omega1() -> TrapProfile {
    TrapProfile::constant(1.0).unwrap()
}

#[test]
fn centre_follows_cosine() {
    let ic = InitialConditions::new(1.0, 0.0, 1.0, 0.0).unwrap();
    let traj = evolve_packet(&ic, &natural(0.0), &omega1(), PI, 1e-10).unwrap();
    let s = traj.final_state();
    assert!((s.q + 1.0).abs() < 1e-8);
    assert!(s.qdot.abs() < 1e-8);
}

#[test]
fn ground_width_is_a_fixed_point() {
    let ic = InitialConditions::new(1.0, 0.0, 1.0, 0.0).unwrap();
    let traj = evolve_packet(&ic, &natural(0.0), &omega1(), PI, 1e-10).unwrap();
    let s = traj.final_state();
    assert!((s.sigma - 1.0).abs() < 1e-8);
    assert!(s.sigmadot.abs() < 1e-8);
}

#[test]
fn ground_state_phase_accumulates_half_omega() {
    let ic = InitialConditions::new(0.0, 0.0, 1.0, 0.0).unwrap();
    let traj = evolve_packet(&ic, &natural(0.0), &omega1(), 5.0, 1e-10).unwrap();
    for s in traj.states() {
        assert!((s.action + 0.5 * s.t).abs() < 1e-8, "t={} action={}", s.t, s.action);
    }
}

#[test]
fn ground_state_is_stationary_up_to_phase() {
    let p = natural(0.0);
    let ic = InitialConditions::new(0.0, 0.0, 1.0, 0.0).unwrap();
    let traj = evolve_packet(&ic, &p, &omega1(), 3.0, 1e-10).unwrap();
    let grid = Grid::symmetric(8.0, 257).unwrap();
    let psi0 = eval_psi(&traj, 0.0, &grid, &ic, &p).unwrap();
    for t in [0.7, 2.9] {
        let psi = eval_psi(&traj, t, &grid, &ic, &p).unwrap();
        let expected = psi0.scale(Complex64::from_polar(1.0, -0.5 * t));
        for (a, b) in psi.values().iter().zip(expected.values()) {
            assert!((a - b).norm() < 1e-8);
        }
    }
}

#[test]
fn packet_stays_normalised() {
    let p = natural(0.2);
    let ic = InitialConditions::new(0.5, -0.4, 0.8, 0.3).unwrap();
    let traj = evolve_packet(&ic, &p, &TrapProfile::sinusoidal(1.0, 0.2, 1.7).unwrap(), 4.0, 1e-10).unwrap();
    for t in [0.0, 1.1, 4.0] {
        let s = traj.state_at(t).unwrap();
        let half = 8.0 * s.sigma.sqrt();
        let grid = Grid::new(s.q - half, s.q + half, 2001).unwrap();
        let psi = eval_psi(&traj, t, &grid, &ic, &p).unwrap();
        assert!((field_norm_sq(&psi) - 1.0).abs() < 1e-8);
    }
    assert!(matches!(
        eval_psi(&traj, 4.5, &Grid::symmetric(1.0, 8).unwrap(), &ic, &p),
        Err(Error::TimeOutOfRange { .. })
    ));
}

#[test]
fn printed_density_integrates_to_three_halves() {
    let s = PacketState { t: 0.0, q: 0.4, qdot: 0.0, sigma: 1.7, sigmadot: 0.0, action: 0.0 };
    let half = 10.0 * s.sigma.sqrt();
    let grid = Grid::new(s.q - half, s.q + half, 4001).unwrap();
    let vals: Vec<f64> = grid.points().map(|x| eval_rho_printed(&s, x)).collect();
    assert!((grid.integrate(&vals) - 1.5).abs() < 1e-8);
}

#[test]
fn classical_energy_conserved() {
    let ic = InitialConditions::new(0.7, 1.3, 1.1, 0.0).unwrap();
    let traj = evolve_packet(&ic, &natural(0.0), &TrapProfile::constant(1.4).unwrap(), 10.0, 1e-11).unwrap();
    let energy = |s: &PacketState| 0.5 * s.qdot * s.qdot + 0.5 * 1.96 * s.q * s.q;
    let e0 = energy(&traj.final_state());
    for s in traj.states() {
        assert!((energy(&s) - e0).abs() < 1e-8 * e0);
    }
}

#[test]
fn wronskian_is_preserved_in_a_driven_trap() {
    let p = natural(0.0);
    let w = TrapProfile::sinusoidal(1.0, 0.3, 2.2).unwrap();
    let a = evolve_packet(&InitialConditions::new(1.0, 0.0, 1.0, 0.0).unwrap(), &p, &w, 6.0, 1e-11).unwrap();
    let b = evolve_packet(&InitialConditions::new(0.0, 1.0, 1.0, 0.0).unwrap(), &p, &w, 6.0, 1e-11).unwrap();
    for i in 0..=60 {
        let t = 0.1 * i as f64;
        let (sa, sb) = (a.state_at(t).unwrap(), b.state_at(t).unwrap());
        assert!((sa.q * sb.qdot - sb.q * sa.qdot - 1.0).abs() < 1e-8, "t={t}");
    }
}

#[test]
fn breather_oscillates_at_twice_omega() {
    let ic = InitialConditions::new(0.0, 0.0, 2.0, 0.0).unwrap();
    let traj = evolve_packet(&ic, &natural(0.0), &omega1(), 6.0 * PI + 0.5, 1e-11).unwrap();
    let period = sigma_period(&traj, 50).unwrap();
    assert!((period - PI).abs() < 1e-6, "{period}");
    // width equation solved exactly: a0 cos^2 t + (sigma*^2 / a0) sin^2 t
    for t in [0.3, 1.9, 5.0] {
        let s = traj.state_at(t).unwrap();
        let exact = 2.0 * t.cos().powi(2) + 0.5 * t.sin().powi(2);
        assert!((s.sigma - exact).abs() < 1e-8);
    }
}

#[test]
fn modulus_independent_of_constant_phase() {
    let p = natural(0.0);
    let w = omega1();
    let grid = Grid::symmetric(8.0, 301).unwrap();
    let ic_a = InitialConditions::new(1.0, 0.5, 1.2, 0.0).unwrap();
    let traj = evolve_packet(&ic_a, &p, &w, 2.0, 1e-10).unwrap();
    // same (q, sigma) evolution, different x0 v0 product in the constant phase
    let ic_b = InitialConditions { x0: 1.0, v0: 0.5, a0: 1.2, b0: 0.0 };
    let s = traj.state_at(1.5).unwrap();
    for x in grid.points() {
        let a = psi_at(&s, x, &ic_a, &p);
        let b = psi_at(&s, x, &InitialConditions { v0: 7.0, ..ic_b }, &p);
        assert!((a.norm() - b.norm()).abs() < 1e-14);
    }
}

#[test]
fn attractive_coupling_widens_equilibrium() {
    // with the width equation as written, g < 0 enlarges sigma*
    let s_neg = stationary_sigma(&natural(-0.3), 1.0).unwrap();
    let s_pos = stationary_sigma(&natural(0.3), 1.0).unwrap();
    assert!(s_neg > 1.0 && s_pos < 1.0);
    let ic = InitialConditions::new(0.0, 0.0, s_neg, 0.0).unwrap();
    let traj = evolve_packet(&ic, &natural(-0.3), &omega1(), 3.0, 1e-10).unwrap();
    assert!((traj.final_state().sigma - s_neg).abs() < 1e-8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn width_trajectory_invariant_under_joint_scaling(
        alpha in 0.5f64..4.0,
        g in -0.5f64..0.5,
        a0 in 0.5f64..2.0,
        b0 in -0.5f64..0.5,
    ) {
        let w = TrapProfile::linear_ramp(1.0, 0.05).unwrap();
        let ic = InitialConditions::new(0.3, 0.1, a0, b0).unwrap();
        let base = evolve_packet(&ic, &PhysParams::new(1.0, 1.0, g).unwrap(), &w, 3.0, 1e-11).unwrap();
        let scaled = evolve_packet(&ic, &PhysParams::new(alpha, alpha, alpha * g).unwrap(), &w, 3.0, 1e-11).unwrap();
        for t in [0.5, 1.7, 3.0] {
            let (a, b) = (base.state_at(t).unwrap(), scaled.state_at(t).unwrap());
            prop_assert!((a.sigma - b.sigma).abs() < 1e-10);
        }
    }

    #[test]
    fn centre_matches_closed_form(x0 in -3.0f64..3.0, v0 in -3.0f64..3.0, omega in 0.3f64..3.0) {
        let ic = InitialConditions::new(x0, v0, 1.0, 0.0).unwrap();
        let traj = evolve_packet(&ic, &natural(0.0), &TrapProfile::constant(omega).unwrap(), 4.0, 1e-11).unwrap();
        for t in [0.9, 2.2, 4.0] {
            let exact = x0 * (omega * t).cos() + v0 / omega * (omega * t).sin();
            prop_assert!((traj.state_at(t).unwrap().q - exact).abs() < 1e-8 * (1.0 + x0.abs() + v0.abs() / omega));
        }
    }
}

#[test]
fn scaled_params_fixture() {
    // alpha = 3 as a fixed regression point
    let w = omega1();
    let ic = InitialConditions::new(0.0, 0.0, 1.5, 0.2).unwrap();
    let a = evolve_packet(&ic, &PhysParams::new(1.0, 1.0, 0.4).unwrap(), &w, 2.0, 1e-11).unwrap();
    let b = evolve_packet(&ic, &PhysParams::new(3.0, 3.0, 1.2).unwrap(), &w, 2.0, 1e-11).unwrap();
    assert!((a.final_state().sigma - b.final_state().sigma).abs() < 1e-10);
}
