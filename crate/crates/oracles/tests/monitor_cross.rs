use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stlgcs::monitor::{check_samples, PiecewiseLinear, SampledSignal, Signal};
use stlgcs::regions::{Polytope, RegionTable};
use stlgcs::stl::{horizon, Formula, Window};
use stlgcs_oracles::{oracle_semantics_dt, ORACLE_DT};

const NAMES: [&str; 3] = ["a", "b", "c"];

fn table() -> RegionTable {
    let bx = |lo: [f64; 2], hi: [f64; 2]| Polytope::from_box(&lo, &hi).unwrap();
    RegionTable::new(
        bx([0.0, 0.0], [10.0, 10.0]),
        BTreeMap::from([
            ("a".into(), bx([0.0, 0.0], [5.0, 6.0])),
            ("b".into(), bx([3.0, 2.0], [9.0, 8.0])),
            ("c".into(), bx([6.0, 0.0], [10.0, 4.0])),
        ]),
    )
    .unwrap()
}

fn window(rng: &mut ChaCha8Rng) -> Window {
    let lo = rng.gen_range(0..=2) as f64 * 0.25;
    let hi = lo + rng.gen_range(0..=4) as f64 * 0.25;
    Window::secs(lo, hi)
}

fn formula(rng: &mut ChaCha8Rng, depth: usize) -> Formula {
    let leaf = depth == 0 || rng.gen_bool(0.3);
    if leaf {
        let p = Formula::pred(NAMES[rng.gen_range(0..3)]);
        return if rng.gen_bool(0.25) { p.not() } else { p };
    }
    match rng.gen_range(0..6) {
        0 => Formula::and(vec![formula(rng, depth - 1), formula(rng, depth - 1)]),
        1 => Formula::or(vec![formula(rng, depth - 1), formula(rng, depth - 1)]),
        2 => Formula::eventually(formula(rng, depth - 1), window(rng)),
        3 => Formula::always(formula(rng, depth - 1), window(rng)),
        4 => Formula::until(formula(rng, depth - 1), formula(rng, depth - 1), window(rng)),
        _ => formula(rng, depth - 1).not(),
    }
}

fn signal(rng: &mut ChaCha8Rng, horizon: f64) -> PiecewiseLinear {
    let knots = rng.gen_range(2..6);
    let mut times: Vec<f64> = (0..knots - 2).map(|_| rng.gen_range(0.0..horizon)).collect();
    times.push(0.0);
    times.push(horizon);
    times.sort_by(f64::total_cmp);
    times.dedup();
    let points = times.iter().map(|_| vec![rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)]).collect();
    PiecewiseLinear::new(times, points).unwrap()
}

#[test]
fn monitor_agrees_with_direct_semantics() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let t = table();
    let mut satisfied = 0;
    for case in 0..500 {
        let f = formula(&mut rng, 3);
        let h = horizon(&f).secs() + 0.5;
        let sig = signal(&mut rng, h);
        let value = |s: f64| sig.value(s).unwrap();
        let expected = oracle_semantics_dt(&value, h, &f, &t, ORACLE_DT);
        let samples = SampledSignal::uniform(&sig, ORACLE_DT).unwrap();
        let got = check_samples(&samples, &f, &t).unwrap().satisfied;
        assert_eq!(got, expected, "case {case}: {f}");
        satisfied += got as usize;
    }
    // both verdicts should be well represented
    assert!((50..450).contains(&satisfied), "{satisfied}");
}
