use std::sync::Arc;

use thinset::cli::thin_pair;
use thinset::corpus;
use thinset::counterexamples::ladder;
use thinset::covering::thin_ball_bound;
use thinset::mollifier::build_phi;
use thinset::operators::OperatorPair;
use thinset::radius::RadiusPair;
use thinset::sets::MeasurableSet;
use thinset::spectral::GridSpec;

#[test]
fn compatible_pair_keeps_a_uniform_constant() {
    let mut pair = RadiusPair::wolff();
    assert!(pair.certify(1e6, 200).unwrap().holds);
    let grid = GridSpec::with_extent(1, 2048, 32.0).unwrap();
    let op = OperatorPair::new(pair.clone(), Arc::new(build_phi(1, 256).unwrap()), grid).unwrap();
    let fs: Vec<_> = corpus::generate(3, 16, 1)
        .iter()
        .map(|f| f.sample(&grid))
        .collect();
    for eps in [0.01, 0.05] {
        let (e, s) = thin_pair(&pair, &grid, eps, 3).unwrap();
        let (e, s) = (MeasurableSet::Periodic(e), MeasurableSet::Periodic(s));
        let up = op.verify_up_inequality(&e, &s, &fs, 1.7).unwrap();
        assert!(up.chain_ok && up.inequality_holds, "{up:?}");
        assert!(up.c_emp >= 0.5 && up.c_emp < up.c_theory);
    }
}

#[test]
fn incompatible_pair_defects_grow_without_bound() {
    let pair = RadiusPair::incompatible();
    for dim in [1, 2] {
        let l = ladder(&pair, 0.1, &[2.0, 4.0, 8.0, 16.0], dim).unwrap();
        assert!(l.windows(2).all(|w| w[1].defect() > w[0].defect()));
        assert!(l[3].defect() > 50.0 * l[0].defect());
    }
}

#[test]
fn thin_sets_stay_thin_on_large_balls() {
    let pair = RadiusPair::wolff();
    let grid = GridSpec::with_extent(1, 2048, 32.0).unwrap();
    let (e, _) = thin_pair(&pair, &grid, 0.05, 1).unwrap();
    let e = MeasurableSet::Periodic(e);
    for (x, r) in [(3.0, 0.5), (8.0, 1.0), (-12.0, 2.0)] {
        let rep = thin_ball_bound(&e, &[x], r, &pair.rho1, 0.05).unwrap();
        assert!(
            rep.holds && rep.ratio <= rep.cover_ratio * (1.0 + 1e-12),
            "{rep:?}"
        );
    }
}
