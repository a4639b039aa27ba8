use std::collections::BTreeMap;

use super::{
    product, prune, share_global_clock, template_always, template_always_eventually, template_eventually,
    template_eventually_always, template_response, template_until, union, AutomatonError, RegionRef, TimedAutomaton,
};
use crate::regions::{intersect_nonempty, RegionTable};
use crate::stl::{classify_fragment, find_response, horizon, is_boolean_predicate, Formula, FragmentClass, Kind, Time};

/// Regions standing in for formulas that are not plain predicate names.
/// Keys are formulas as printed by `Formula`'s `Display`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Bindings {
    /// `φ` → a region inside `¬φ`. Also supplies the free region of a
    /// response pattern, keyed by its antecedent.
    pub negations: BTreeMap<String, String>,
    /// `φ` → a region covering the part of the workspace where `φ` fails.
    pub complement_covers: BTreeMap<String, String>,
}

struct Compiler<'a> {
    bindings: &'a Bindings,
    table: &'a RegionTable,
    horizon: Time,
}

impl Compiler<'_> {
    fn known(&self, name: &str) -> Result<(), AutomatonError> {
        match self.table.get(name) {
            Some(_) => Ok(()),
            None => Err(AutomatonError::UnboundPredicate(name.to_string())),
        }
    }

    /// Region of `¬inner`, checked to miss every region in `forbidden`.
    fn negation(&self, inner: &Formula, forbidden: &[String]) -> Result<String, AutomatonError> {
        let key = inner.to_string();
        let region = self
            .bindings
            .negations
            .get(&key)
            .ok_or_else(|| AutomatonError::UnboundPredicate(format!("!({key})")))?;
        self.known(region)?;
        let r = self.table.get(region).unwrap();
        for p in forbidden {
            self.known(p)?;
            if intersect_nonempty(r, self.table.get(p).unwrap())? {
                return Err(match inner.kind {
                    Kind::Pred(_) => AutomatonError::NegationOverlap { predicate: key, region: region.clone() },
                    _ => AutomatonError::RegionOverlap { free: region.clone(), goal: p.clone() },
                });
            }
        }
        Ok(region.clone())
    }

    fn region(&self, f: &Formula) -> Result<RegionRef, AutomatonError> {
        match &f.kind {
            Kind::True => Ok(RegionRef::new()),
            Kind::Pred(p) => {
                self.known(p)?;
                Ok(RegionRef::from([p.clone()]))
            }
            Kind::Not(inner) => match &inner.kind {
                Kind::Pred(p) => Ok(RegionRef::from([self.negation(inner, std::slice::from_ref(p))?])),
                _ => Err(AutomatonError::OutsideFragment(f.to_string())),
            },
            Kind::And(cs) => {
                let mut r = RegionRef::new();
                for c in cs {
                    r.extend(self.region(c)?);
                }
                Ok(r)
            }
            _ => Err(AutomatonError::OutsideFragment(f.to_string())),
        }
    }

    fn cover(&self, phi: &Formula) -> Result<Option<RegionRef>, AutomatonError> {
        match self.bindings.complement_covers.get(&phi.to_string()) {
            Some(name) => {
                self.known(name)?;
                Ok(Some(RegionRef::from([name.clone()])))
            }
            None => Ok(None),
        }
    }

    fn build(&self, f: &Formula) -> Result<TimedAutomaton, AutomatonError> {
        let t = self.horizon;
        if is_boolean_predicate(f) {
            return template_always(Time::ZERO, Time::ZERO, self.region(f)?, t);
        }
        let bp = is_boolean_predicate;
        match &f.kind {
            Kind::Eventually { child, window } if bp(child) => template_eventually(window.lo, window.hi, self.region(child)?, t),
            Kind::Always { child, window } if bp(child) => template_always(window.lo, window.hi, self.region(child)?, t),
            Kind::Until { lhs, rhs, window } if bp(lhs) && bp(rhs) => {
                let r1 = self.region(lhs)?;
                let mut both = r1.clone();
                both.extend(self.region(rhs)?);
                template_until(window.lo, window.hi, r1, both, t)
            }
            Kind::Eventually { child, window: outer } => match &child.kind {
                Kind::Always { child: phi, window: inner } if bp(phi) => {
                    template_eventually_always(outer.lo, outer.hi, inner.lo, inner.hi, self.region(phi)?, t)
                }
                _ => Err(AutomatonError::OutsideFragment(f.to_string())),
            },
            Kind::Always { child, window: outer } => match &child.kind {
                Kind::Eventually { child: phi, window: inner } if bp(phi) => template_always_eventually(
                    outer.lo,
                    outer.hi,
                    inner.lo,
                    inner.hi,
                    self.region(phi)?,
                    self.cover(phi)?,
                    t,
                )
                .map_err(|e| match e {
                    AutomatonError::MissingNegRegion(_) => AutomatonError::MissingNegRegion(phi.to_string()),
                    e => e,
                }),
                _ => Err(AutomatonError::OutsideFragment(f.to_string())),
            },
            Kind::Or(cs) => {
                let mut acc = self.build(&cs[0])?;
                for c in &cs[1..] {
                    acc = union(&acc, &self.build(c)?)?;
                }
                Ok(acc)
            }
            Kind::And(cs) => {
                let mut parts = Vec::new();
                let mut rest: Vec<&Formula> = cs.iter().collect();
                if let Some((resp, used)) = find_response(cs) {
                    for g in resp.goals.iter().chain([&resp.service]) {
                        self.known(g)?;
                    }
                    let free = self.negation(&resp.antecedent, &resp.goals)?;
                    let goals: Vec<RegionRef> = resp.goals.iter().map(|g| RegionRef::from([g.clone()])).collect();
                    parts.push(template_response(
                        resp.a,
                        resp.b,
                        &goals,
                        RegionRef::from([resp.service.clone()]),
                        RegionRef::from([free]),
                        t,
                    )?);
                    rest = cs.iter().enumerate().filter(|(i, _)| !used.contains(i)).map(|(_, c)| c).collect();
                }
                for c in rest {
                    parts.push(self.build(c)?);
                }
                let mut acc = parts.remove(0);
                for p in &parts {
                    acc = product(&acc, p, self.table)?;
                }
                Ok(acc)
            }
            _ => Err(AutomatonError::OutsideFragment(f.to_string())),
        }
    }
}

/// Timed automaton for `f` over `[0, horizon]`: templates combined by union
/// and product, global clocks shared, then pruned.
pub fn compile(
    f: &Formula,
    bindings: &Bindings,
    table: &RegionTable,
    horizon_t: Time,
) -> Result<TimedAutomaton, AutomatonError> {
    if classify_fragment(f) == FragmentClass::OutsideFragment {
        return Err(AutomatonError::OutsideFragment(f.to_string()));
    }
    if horizon(f) > horizon_t {
        return Err(AutomatonError::Bounds(format!("formula horizon {} exceeds T = {horizon_t}", horizon(f))));
    }
    let raw = Compiler { bindings, table, horizon: horizon_t }.build(f)?;
    prune(&share_global_clock(&raw)?)
}

#[cfg(test)]
mod tests {
    use super::super::{validate_run, ClockRole, RunStep, TaRun};
    use super::*;
    use crate::regions::Polytope;
    use crate::stl::parse_formula;

    fn secs(s: i64) -> Time {
        Time::from_secs(s)
    }

    fn bx(lo: [f64; 2], hi: [f64; 2]) -> Polytope {
        Polytope::from_box(&lo, &hi).unwrap()
    }

    fn table() -> RegionTable {
        RegionTable::new(
            bx([0.0, 0.0], [10.0, 10.0]),
            BTreeMap::from([
                ("R".to_string(), bx([1.0, 6.0], [3.0, 9.0])),
                ("Gr".to_string(), bx([7.0, 1.0], [9.0, 4.0])),
                ("B".to_string(), bx([7.0, 7.5], [9.5, 9.5])),
                ("notB".to_string(), bx([0.0, 0.0], [6.5, 10.0])),
                ("bad".to_string(), bx([0.0, 0.0], [8.0, 10.0])),
                ("S".to_string(), bx([4.0, 4.0], [6.0, 6.0])),
                ("free".to_string(), bx([4.0, 0.0], [6.0, 10.0])),
            ]),
        )
        .unwrap()
    }

    fn bindings() -> Bindings {
        Bindings {
            negations: BTreeMap::from([
                ("B".to_string(), "notB".to_string()),
                ("R | Gr".to_string(), "free".to_string()),
            ]),
            complement_covers: BTreeMap::from([("R".to_string(), "notB".to_string())]),
        }
    }

    fn unshared(f: &str) -> TimedAutomaton {
        let b = bindings();
        let table = table();
        Compiler { bindings: &b, table: &table, horizon: secs(30) }.build(&parse_formula(f).unwrap()).unwrap()
    }

    #[test]
    fn stlcg_task_compiles_with_one_global_clock() {
        let f = "F[0,15] G[0,5] R & F[0,15] G[0,5] Gr & G[0,20] !B";
        let raw = unshared(f);
        let size = 3;
        assert!(raw.num_clocks() <= 2 * size);
        let a = compile(&parse_formula(f).unwrap(), &bindings(), &table(), secs(20)).unwrap();
        assert_eq!(a.num_clocks(), 3);
        assert_eq!(a.clocks.iter().filter(|c| c.role == ClockRole::Global).count(), 1);
        assert!(a.num_states() <= 27);
        assert!(!a.initial.is_empty() && !a.accepting.is_empty());
    }

    #[test]
    fn negation_must_be_disjoint() {
        let mut b = bindings();
        b.negations.insert("B".into(), "bad".into());
        let err = compile(&parse_formula("G[0,5] !B").unwrap(), &b, &table(), secs(10)).unwrap_err();
        assert!(matches!(err, AutomatonError::NegationOverlap { .. }), "{err}");
        let err = compile(&parse_formula("G[0,5] !R").unwrap(), &b, &table(), secs(10)).unwrap_err();
        assert_eq!(err, AutomatonError::UnboundPredicate("!(R)".into()));
        let err = compile(&parse_formula("F[0,5] Q").unwrap(), &b, &table(), secs(10)).unwrap_err();
        assert_eq!(err, AutomatonError::UnboundPredicate("Q".into()));
    }

    #[test]
    fn outside_fragment_and_horizon() {
        let err = compile(&parse_formula("F[0,5] (R | G[0,1] Gr)").unwrap(), &bindings(), &table(), secs(10));
        assert!(matches!(err, Err(AutomatonError::OutsideFragment(_))));
        let err = compile(&parse_formula("F[0,25] R").unwrap(), &bindings(), &table(), secs(20));
        assert!(matches!(err, Err(AutomatonError::Bounds(_))));
    }

    #[test]
    fn always_eventually_uses_cover() {
        let a = compile(&parse_formula("G[0,10] F[0,4] R").unwrap(), &bindings(), &table(), secs(20)).unwrap();
        assert!(a.states.iter().any(|s| s.region.contains("notB")));
        let err = compile(&parse_formula("G[0,10] F[0,4] Gr").unwrap(), &bindings(), &table(), secs(20));
        assert_eq!(err, Err(AutomatonError::MissingNegRegion("Gr".into())));
    }

    #[test]
    fn response_inside_conjunction() {
        let f = "G[0,20] ((R | Gr) -> F[0,5] S) & F[0,20] R & F[0,20] Gr & G[0,30] !B";
        let a = compile(&parse_formula(f).unwrap(), &bindings(), &table(), secs(30)).unwrap();
        assert!(a.states.iter().any(|s| s.region.contains("free")));
        let mut b = bindings();
        b.negations.insert("R | Gr".into(), "notB".into());
        let err = compile(&parse_formula(f).unwrap(), &b, &table(), secs(30)).unwrap_err();
        assert_eq!(err, AutomatonError::RegionOverlap { free: "notB".into(), goal: "R".into() });
    }

    #[test]
    fn disjunction_is_union() {
        let a = unshared("F[0,5] R | F[0,5] Gr");
        assert_eq!(a.initial.len(), 2);
        assert_eq!(a.num_states(), 6);
    }

    #[test]
    fn compiled_eventually_accepts_hand_run() {
        let a = compile(&parse_formula("F[2,5] R").unwrap(), &bindings(), &table(), secs(10)).unwrap();
        let run = TaRun {
            steps: vec![
                RunStep { state: 0, start: 0.0, end: 3.0, valuation: vec![0.0] },
                RunStep { state: 1, start: 3.0, end: 4.0, valuation: vec![3.0] },
                RunStep { state: 2, start: 4.0, end: 10.0, valuation: vec![4.0] },
            ],
        };
        let report = validate_run(&a, &run);
        assert!(report.is_valid() && report.accepting, "{report:?}");
    }
}
