//! Random accepting runs of a timed automaton and piecewise-linear
//! trajectories induced by them.

use rand::seq::SliceRandom;
use rand::Rng;
use stlgcs::automaton::{RunStep, StateId, TaRun, TimedAutomaton, Transition};
use stlgcs::monitor::PiecewiseLinear;
use stlgcs::regions::{Polytope, RegionTable};

#[derive(Clone, Debug)]
pub struct SampledRun {
    pub run: TaRun,
    pub signal: PiecewiseLinear,
}

const MAX_TRANSITIONS: usize = 40;
const POINT_TRIES: usize = 200;

/// Tries up to `attempts` random walks; returns the first that ends in an
/// accepting state at the horizon and admits an induced trajectory.
pub fn sample_accepting_run(
    ta: &TimedAutomaton,
    table: &RegionTable,
    rng: &mut impl Rng,
    attempts: usize,
) -> Option<SampledRun> {
    (0..attempts).find_map(|_| walk(ta, rng).and_then(|steps| induce(ta, table, steps, rng)))
}

/// Delay window `[lo, hi]` in microseconds after which `tr` may fire.
fn delay_window(tr: &Transition, val: &[i64], remaining: i64) -> Option<(i64, i64)> {
    let (mut lo, mut hi) = (0i64, remaining);
    for (&c, iv) in &tr.guard.bounds {
        lo = lo.max(iv.lo.micros() - val[c]);
        hi = hi.min(iv.hi.micros() - val[c]);
    }
    (lo <= hi).then_some((lo, hi))
}

fn pick_delay(rng: &mut impl Rng, lo: i64, hi: i64) -> i64 {
    match rng.gen_range(0..5) {
        0 => lo,
        1 => hi,
        _ => rng.gen_range(lo..=hi),
    }
}

/// Occupancy as (state, start, valuation) in microseconds.
fn walk(ta: &TimedAutomaton, rng: &mut impl Rng) -> Option<Vec<(StateId, i64, Vec<i64>)>> {
    let horizon = ta.horizon.micros();
    let initial: Vec<StateId> = ta.initial.iter().copied().collect();
    let mut s = *initial.choose(rng)?;
    let mut now = 0i64;
    let mut val = vec![0i64; ta.num_clocks()];
    let mut steps = vec![(s, 0, val.clone())];
    for _ in 0..MAX_TRANSITIONS {
        if ta.accepting.contains(&s) && rng.gen_bool(0.3) {
            return Some(steps);
        }
        let mut options: Vec<&Transition> = ta.outgoing(s).iter().collect();
        options.shuffle(rng);
        let fired = options.into_iter().find_map(|tr| delay_window(tr, &val, horizon - now).map(|w| (tr, w)));
        let Some((tr, (lo, hi))) = fired else {
            return ta.accepting.contains(&s).then_some(steps);
        };
        let d = pick_delay(rng, lo, hi);
        now += d;
        for (c, v) in val.iter_mut().enumerate() {
            *v = if tr.resets.contains(&c) { 0 } else { *v + d };
        }
        s = tr.to;
        steps.push((s, now, val.clone()));
    }
    ta.accepting.contains(&s).then_some(steps)
}

fn inside(p: &Polytope, x: &[f64]) -> bool {
    p.rows().all(|(a, b)| a.iter().zip(x).map(|(u, v)| u * v).sum::<f64>() <= b + 1e-9)
}

fn sample_point(p: &Polytope, rng: &mut impl Rng) -> Option<Vec<f64>> {
    let (lo, hi) = p.bounding_box().ok()??;
    for _ in 0..POINT_TRIES {
        let x: Vec<f64> = lo.iter().zip(&hi).map(|(&a, &b)| if b > a { rng.gen_range(a..=b) } else { a }).collect();
        if inside(p, &x) {
            return Some(x);
        }
    }
    let mid: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
    if inside(p, &mid) {
        return Some(mid);
    }
    let (c, _) = p.chebyshev().ok()??;
    inside(p, &c).then_some(c)
}

fn induce(
    ta: &TimedAutomaton,
    table: &RegionTable,
    steps: Vec<(StateId, i64, Vec<i64>)>,
    rng: &mut impl Rng,
) -> Option<SampledRun> {
    let horizon = ta.horizon.micros();
    let ends: Vec<i64> = (0..steps.len()).map(|j| steps.get(j + 1).map_or(horizon, |n| n.1)).collect();
    let region = |names: &[StateId]| {
        let all = names.iter().flat_map(|&s| ta.states[s].region.iter().map(String::as_str));
        table.realize(all).ok()
    };

    let mut boundaries: Vec<i64> = steps.iter().map(|s| s.1).chain([horizon]).collect();
    boundaries.dedup();
    let mut times = Vec::new();
    let mut points = Vec::new();
    for (k, &tau) in boundaries.iter().enumerate() {
        let active: Vec<StateId> =
            (0..steps.len()).filter(|&j| steps[j].1 <= tau && tau <= ends[j]).map(|j| steps[j].0).collect();
        points.push(sample_point(&region(&active)?, rng)?);
        times.push(tau as f64 * 1e-6);
        if let Some(&next) = boundaries.get(k + 1) {
            if next - tau >= 2 {
                let j = (0..steps.len()).find(|&j| steps[j].1 == tau && ends[j] == next)?;
                let mid = rng.gen_range(tau + 1..next);
                points.push(sample_point(&region(&[steps[j].0])?, rng)?);
                times.push(mid as f64 * 1e-6);
            }
        }
    }
    if times.len() == 1 {
        // zero horizon
        times.push(times[0] + 1e-9);
        points.push(points[0].clone());
    }
    let signal = PiecewiseLinear::new(times, points).ok()?;
    let run = TaRun {
        steps: steps
            .iter()
            .zip(&ends)
            .map(|((s, start, val), end)| RunStep {
                state: *s,
                start: *start as f64 * 1e-6,
                end: *end as f64 * 1e-6,
                valuation: val.iter().map(|&v| v as f64 * 1e-6).collect(),
            })
            .collect(),
    };
    Some(SampledRun { run, signal })
}
