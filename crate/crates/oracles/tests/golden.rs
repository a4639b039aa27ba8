use std::collections::BTreeMap;

use stlgcs::monitor::{check, PiecewiseLinear, Signal};
use stlgcs::regions::{Polytope, RegionTable};
use stlgcs::stl::parse_formula;
use stlgcs_oracles::oracle_semantics;

fn table() -> RegionTable {
    let line = |lo: f64, hi: f64| Polytope::from_box(&[lo], &[hi]).unwrap();
    RegionTable::new(
        line(-20.0, 20.0),
        BTreeMap::from([
            ("a".into(), line(5.0, 20.0)),
            ("b".into(), line(-20.0, 6.0)),
            ("c".into(), line(2.0, 4.0)),
            ("d".into(), line(9.0, 20.0)),
        ]),
    )
    .unwrap()
}

fn pl(knots: &[(f64, f64)]) -> PiecewiseLinear {
    PiecewiseLinear::new(knots.iter().map(|k| k.0).collect(), knots.iter().map(|k| vec![k.1]).collect()).unwrap()
}

#[test]
fn golden_table() {
    let ramp = pl(&[(0.0, 0.0), (10.0, 10.0)]);
    let flat = pl(&[(0.0, 3.0), (10.0, 3.0)]);
    let tri = pl(&[(0.0, 0.0), (5.0, 5.0), (10.0, 0.0)]);
    let jump = pl(&[(0.0, 0.0), (2.0, 0.0), (3.0, 8.0), (10.0, 8.0)]);
    let cases: [(&PiecewiseLinear, &str, bool); 25] = [
        (&ramp, "F[0,10] d", true),
        (&ramp, "F[0,8] d", false),
        (&ramp, "G[0,10] b", false),
        (&ramp, "G[0,6] b", true),
        (&ramp, "b U[0,10] a", true),
        (&ramp, "b U[0,4] a", false),
        (&ramp, "F[2,3] c", true),
        (&ramp, "G[2,4] c", true),
        (&ramp, "G[2,4.5] c", false),
        (&flat, "G[0,10] c", true),
        (&flat, "F[0,10] a", false),
        (&flat, "!F[0,10] a", true),
        (&tri, "F[0,8] G[0,2] c", true),
        (&tri, "F[0,7] G[0,2.5] c", false),
        (&tri, "G[0,5] F[0,5] a", true),
        (&tri, "G[0,5] F[0,4] a", false),
        (&tri, "F[0,10] d", false),
        (&jump, "G[0,10] (b | a)", true),
        (&jump, "F[0,10] (a & b)", true),
        (&jump, "F[0,2.5] a", false),
        (&jump, "c U[0,10] a", false),
        (&jump, "!a U[0,10] a", false),
        (&jump, "b U[0,10] a", true),
        (&ramp, "G[0,10] true", true),
        (&tri, "F[0,9] (c & F[0,1] a)", true),
    ];
    let t = table();
    for (i, (sig, text, expected)) in cases.iter().enumerate() {
        let f = parse_formula(text).unwrap();
        let value = |s: f64| sig.value(s).unwrap();
        assert_eq!(oracle_semantics(&value, sig.horizon(), &f, &t), *expected, "oracle, case {i}: {text}");
        let verdict = check(*sig, &f, &t, 1e-2).unwrap();
        assert_eq!(verdict.satisfied, *expected, "monitor, case {i}: {text}");
    }
}
