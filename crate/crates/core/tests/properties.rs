use num_complex::Complex64;
use proptest::prelude::*;

use wconc::analytic::{p_total_cpc, p_total_ppc};
use wconc::optics::{measure_pm, pbs, single_photon};
use wconc::protocol::{
    apply_pivot, photon_modes, run, run_step, step_order, AncillaSpec, GateKind,
};
use wconc::qstate::{tensor, w_state, ModeId, PureState, WCoefficients};

const TOL: f64 = 1e-12;

fn amplitude() -> impl Strategy<Value = Complex64> {
    (0.1f64..1.0, 0.0..std::f64::consts::TAU).prop_map(|(r, t)| Complex64::from_polar(r, t))
}

fn coeffs(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = WCoefficients> {
    n.prop_flat_map(|n| prop::collection::vec(amplitude(), n))
        .prop_map(|a| WCoefficients::normalized(a).unwrap())
}

fn with_pivot(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = (WCoefficients, usize)> {
    coeffs(n).prop_flat_map(|c| {
        let n = c.n();
        (Just(c), 1..=n)
    })
}

fn mode(name: &str) -> ModeId {
    ModeId::new(name).unwrap()
}

fn two_photons(a: (Complex64, Complex64), b: (Complex64, Complex64)) -> PureState {
    let norm = |(h, v): (Complex64, Complex64)| {
        let s = (h.norm_sqr() + v.norm_sqr()).sqrt();
        (h / s, v / s)
    };
    let (ah, av) = norm(a);
    let (bh, bv) = norm(b);
    tensor(
        &single_photon(ah, av, &mode("x")).unwrap(),
        &single_photon(bh, bv, &mode("y")).unwrap(),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pbs_preserves_norm_and_is_self_inverse(
        a in (amplitude(), amplitude()),
        b in (amplitude(), amplitude()),
    ) {
        let s = two_photons(a, b);
        let (x, y, u, v) = (mode("x"), mode("y"), mode("u"), mode("v"));
        let once = pbs(&s, &x, &y, &u, &v).unwrap();
        prop_assert!((once.norm_sqr() - 1.0).abs() < TOL);
        let twice = pbs(&once, &u, &v, &x, &y).unwrap();
        prop_assert!(twice.approx_eq(&s, TOL));
    }

    #[test]
    fn pm_branches_partition_probability(
        a in (amplitude(), amplitude()),
        b in (amplitude(), amplitude()),
    ) {
        let s = two_photons(a, b);
        let branches = measure_pm(&s, &mode("y")).unwrap();
        prop_assert!((branches.plus.probability + branches.minus.probability - 1.0).abs() < TOL);
    }

    #[test]
    fn every_check_partitions_probability_and_keeps_norm((c, pivot) in with_pivot(2..=5)) {
        let n = c.n();
        let state = w_state(&c, &photon_modes(n)).unwrap();
        for gate in [GateKind::Ppc, GateKind::Cpc] {
            for k in step_order(n, pivot).unwrap() {
                let spec = AncillaSpec::new(n, k, 1, pivot).unwrap();
                let records = run_step(&state, &spec, gate, 1.0).unwrap();
                let total: f64 = records.iter().map(|r| r.branch_p()).sum();
                prop_assert!((total - 1.0).abs() < TOL);
                for r in records.iter().filter(|r| r.pm.is_some()) {
                    prop_assert!((r.post_state.norm_sqr() - 1.0).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn ppc_total_is_invariant_under_relabelling((c, pivot) in with_pivot(2..=6), shift in 0usize..6) {
        // Rotating the photon labels moves the pivot with them.
        let n = c.n();
        let shift = shift % n;
        let mut rotated = c.alphas().to_vec();
        rotated.rotate_left(shift);
        let rotated = WCoefficients::new(rotated).unwrap();
        let new_pivot = (pivot + n - 1 - shift) % n + 1;
        let a = p_total_ppc(&c.moduli_sqr(), pivot).unwrap();
        let b = p_total_ppc(&rotated.moduli_sqr(), new_pivot).unwrap();
        prop_assert!((a - b).abs() < TOL);
        let sim = run(&rotated, GateKind::Ppc, 1, new_pivot).unwrap().total_p;
        prop_assert!((sim - a).abs() < TOL);
    }

    #[test]
    fn retrying_never_lowers_the_total((c, pivot) in with_pivot(2..=6)) {
        let table = p_total_cpc(&c.moduli_sqr(), 10, pivot).unwrap();
        for m in 1..10 {
            prop_assert!(table.total_at(m + 1) >= table.total_at(m));
        }
        prop_assert!(table.total() <= 1.0 + TOL);
    }

    #[test]
    fn pivot_swap_is_an_involution((c, pivot) in with_pivot(2..=6)) {
        let twice = apply_pivot(&apply_pivot(&c, pivot).unwrap(), pivot).unwrap();
        prop_assert_eq!(twice, c);
    }

    #[test]
    fn state_json_round_trips(c in coeffs(2..=5)) {
        let state = w_state(&c, &photon_modes(c.n())).unwrap();
        let back = PureState::from_json(&state.to_json()).unwrap();
        prop_assert!(back.approx_eq(&state, 0.0));
    }

    #[test]
    fn simulator_matches_closed_form_total((c, pivot) in with_pivot(2..=5), max_m in 1usize..=4) {
        let sim = run(&c, GateKind::Cpc, max_m, pivot).unwrap().total_p;
        let closed = p_total_cpc(&c.moduli_sqr(), max_m, pivot).unwrap().total();
        prop_assert!((sim - closed).abs() < TOL);
    }
}
