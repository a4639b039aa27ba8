//! Serialized outputs: result and verdict JSON, trajectory CSV, SVG, and
//! automaton/JTS dumps.

use serde_json::{json, Value};

use stlgcs::automaton::TimedAutomaton;
use stlgcs::bezier::{eval_trajectory, velocity, Trajectory};
use stlgcs::jts::JointTransitionSystem;
use stlgcs::monitor::Verdict;
use stlgcs::plan::{PlanResult, Scenario};
use stlgcs::regions::{Polytope, RegionTable};

/// Samples per trajectory in the CSV, besides the breakpoints.
pub const CSV_STEPS: usize = 2000;
pub const SVG_SAMPLES: usize = 500;

pub fn verdict_json(v: &Verdict) -> Value {
    json!({
        "satisfied": v.satisfied,
        "margin": v.margin,
        "certified": v.certified,
        "samples": v.samples,
        "warnings": v.warnings,
        "witnesses": v.witnesses.iter().map(|w| json!({
            "node": w.node, "at": w.at, "holds": w.holds, "instant": w.instant,
        })).collect::<Vec<_>>(),
    })
}

/// Everything about a plan except wall-clock timings, so that identical
/// inputs give identical bytes.
pub fn result_json(s: &Scenario, r: &PlanResult, mode: &str, seed: u64) -> Value {
    let st = &r.stats;
    let segments: Vec<Value> = r
        .trajectory
        .as_ref()
        .map(|t| {
            t.segments()
                .iter()
                .zip(&r.path)
                .map(|(seg, label)| {
                    json!({
                        "state": label,
                        "start": seg.start(),
                        "end": seg.end(),
                        "control_points": seg.spatial.points(),
                        "timing": seg.timing.points().iter().map(|p| p[0]).collect::<Vec<_>>(),
                    })
                })
                .collect()
        })
        .unwrap_or_default();
    let run = r.run.as_ref().map(|run| {
        run.steps.iter().map(|step| json!({"state": step.state, "start": step.start, "end": step.end})).collect::<Vec<_>>()
    });
    json!({
        "name": s.name,
        "formula": s.formula.to_string(),
        "status": r.status.as_str(),
        "verified": r.verified(),
        "diagnostic": r.diagnostic,
        "mode": mode,
        "seed": seed,
        "path": r.path,
        "edges": r.edges,
        "relaxed_cost": r.relaxed_cost,
        "cost": r.cost,
        "segments": segments,
        "run": run,
        "run_valid": r.run_report.as_ref().map(|x| x.is_valid()),
        "max_guard_residual": r.run_report.as_ref().map(|x| x.max_guard_residual),
        "verdict": r.verdict.as_ref().map(verdict_json),
        "statistics": {
            "ta_states": st.ta_states,
            "ta_clocks": st.ta_clocks,
            "jts_states": st.jts.map(|j| j.states),
            "jts_inner": st.jts.map(|j| j.inner),
            "jts_outer": st.jts.map(|j| j.outer),
            "gcs_vertices": st.gcs_vertices,
            "gcs_edges": st.gcs_edges,
            "variables": st.variables,
            "constraints": st.constraints,
            "candidates": st.candidates,
            "candidates_tried": st.candidates_tried,
            "bb_nodes": st.bb_nodes,
        },
    })
}

fn sample_times(t: &Trajectory, steps: usize) -> Vec<f64> {
    let h = t.horizon();
    let mut times: Vec<f64> = (0..=steps).map(|i| h * i as f64 / steps as f64).collect();
    times.extend(t.breakpoints());
    times.sort_by(f64::total_cmp);
    times.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
    times
}

/// `t,x0..,xdot0..` rows at a uniform grid merged with the breakpoints.
pub fn trajectory_csv(t: &Trajectory) -> String {
    let n = t.dim();
    let mut out = String::from("t");
    for i in 0..n {
        out += &format!(",x{i}");
    }
    for i in 0..n {
        out += &format!(",xdot{i}");
    }
    out.push('\n');
    for time in sample_times(t, CSV_STEPS) {
        let x = eval_trajectory(t, time).expect("sample inside horizon");
        let v = velocity(t, time).expect("sample inside horizon");
        out += &format!("{time}");
        for c in x.iter().chain(&v) {
            out += &format!(",{c}");
        }
        out.push('\n');
    }
    out
}

/// Vertices of a 2-D polytope's projection onto `axes`, found by clipping
/// its bounding box; only exact when the polytope is 2-D.
fn polygon(p: &Polytope, axes: [usize; 2]) -> Option<Vec<[f64; 2]>> {
    let (lo, hi) = p.bounding_box().ok()??;
    let [i, j] = axes;
    let mut poly = vec![[lo[i], lo[j]], [hi[i], lo[j]], [hi[i], hi[j]], [lo[i], hi[j]]];
    if p.dim() == 2 {
        for (a, b) in p.rows() {
            let f = |q: &[f64; 2]| a[0] * q[0] + a[1] * q[1] - b;
            let mut next = Vec::new();
            for k in 0..poly.len() {
                let (u, w) = (poly[k], poly[(k + 1) % poly.len()]);
                let (fu, fw) = (f(&u), f(&w));
                if fu <= 0.0 {
                    next.push(u);
                }
                if (fu < 0.0 && fw > 0.0) || (fu > 0.0 && fw < 0.0) {
                    let s = fu / (fu - fw);
                    next.push([u[0] + s * (w[0] - u[0]), u[1] + s * (w[1] - u[1])]);
                }
            }
            poly = next;
            if poly.is_empty() {
                return None;
            }
        }
    }
    Some(poly)
}

const PALETTE: [&str; 6] = ["#d62728", "#2ca02c", "#1f77b4", "#ff7f0e", "#9467bd", "#8c564b"];

/// Region outlines, cell outlines, the trajectory and its junctions. One-
/// dimensional trajectories are drawn against time.
pub fn trajectory_svg(t: &Trajectory, table: &RegionTable, cells: &stlgcs::regions::Decomposition, axes: [usize; 2]) -> String {
    let size = 600.0;
    let times = sample_times(t, SVG_SAMPLES);
    let one_d = t.dim() == 1;
    let pt = |time: f64| -> [f64; 2] {
        let x = eval_trajectory(t, time).expect("sample inside horizon");
        if one_d { [time, x[0]] } else { [x[axes[0]], x[axes[1]]] }
    };
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    let mut grow = |q: [f64; 2]| {
        for k in 0..2 {
            lo[k] = lo[k].min(q[k]);
            hi[k] = hi[k].max(q[k]);
        }
    };
    if let Some((wl, wh)) = table.workspace().bounding_box().ok().flatten() {
        if one_d {
            grow([0.0, wl[0]]);
            grow([t.horizon(), wh[0]]);
        } else {
            grow([wl[axes[0]], wl[axes[1]]]);
            grow([wh[axes[0]], wh[axes[1]]]);
        }
    }
    let path: Vec<[f64; 2]> = times.iter().map(|&s| pt(s)).collect();
    path.iter().for_each(|&q| grow(q));
    let span = [(hi[0] - lo[0]).max(1e-9), (hi[1] - lo[1]).max(1e-9)];
    let map = |q: [f64; 2]| [20.0 + (q[0] - lo[0]) / span[0] * (size - 40.0), size - 20.0 - (q[1] - lo[1]) / span[1] * (size - 40.0)];
    let points = |ps: &[[f64; 2]]| ps.iter().map(|&q| { let m = map(q); format!("{:.3},{:.3}", m[0], m[1]) }).collect::<Vec<_>>().join(" ");

    let mut out = format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{size}\" height=\"{size}\" viewBox=\"0 0 {size} {size}\">\n");
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    let outline = |p: &Polytope| -> Option<Vec<[f64; 2]>> {
        if one_d {
            let (l, h) = p.bounding_box().ok()??;
            Some(vec![[0.0, l[0]], [t.horizon(), l[0]], [t.horizon(), h[0]], [0.0, h[0]]])
        } else {
            polygon(p, axes)
        }
    };
    for (_, c) in cells.iter() {
        if let Some(poly) = outline(c) {
            out += &format!("<polygon points=\"{}\" fill=\"none\" stroke=\"#bbbbbb\" stroke-dasharray=\"4 3\"/>\n", points(&poly));
        }
    }
    for (k, name) in table.names().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        if let Some(poly) = outline(table.get(name).unwrap()) {
            out += &format!("<polygon points=\"{}\" fill=\"{color}\" fill-opacity=\"0.15\" stroke=\"{color}\"/>\n", points(&poly));
            let m = map(poly[0]);
            out += &format!("<text x=\"{:.3}\" y=\"{:.3}\" font-size=\"12\" fill=\"{color}\">{name}</text>\n", m[0] + 2.0, m[1] - 2.0);
        }
    }
    out += &format!("<polyline points=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"2\"/>\n", points(&path));
    for b in t.breakpoints() {
        let m = map(pt(b));
        out += &format!("<circle cx=\"{:.3}\" cy=\"{:.3}\" r=\"3\" fill=\"black\"/>\n", m[0], m[1]);
    }
    out += "</svg>\n";
    out
}

pub fn automaton_json(ta: &TimedAutomaton) -> Value {
    json!({
        "horizon": ta.horizon.secs(),
        "clocks": ta.clocks.iter().map(|c| json!({"name": c.name, "role": format!("{:?}", c.role)})).collect::<Vec<_>>(),
        "states": ta.states.iter().map(|s| json!({"label": s.label, "region": s.region})).collect::<Vec<_>>(),
        "initial": ta.initial,
        "accepting": ta.accepting,
        "transitions": ta.transitions.iter().map(|tr| json!({
            "from": tr.from,
            "to": tr.to,
            "guard": tr.guard.bounds.iter().map(|(c, iv)| (ta.clocks[*c].name.clone(), json!([iv.lo.secs(), iv.hi.secs()]))).collect::<serde_json::Map<_, _>>(),
            "resets": tr.resets.iter().map(|c| ta.clocks[*c].name.clone()).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
        "stats": {"states": ta.num_states(), "clocks": ta.num_clocks(), "transitions": ta.transitions.len()},
    })
}

pub fn jts_json(j: &JointTransitionSystem) -> Value {
    let st = j.stats();
    json!({
        "states": (0..j.states.len()).map(|q| j.label(q)).collect::<Vec<_>>(),
        "initial": j.initial_states(),
        "accepting": j.accepting_states(),
        "inner": j.inner,
        "outer": j.outer.iter().map(|e| json!({"from": e.from, "to": e.to, "chain": e.chain.states})).collect::<Vec<_>>(),
        "stats": {"states": st.states, "inner": st.inner, "outer": st.outer, "clocks": st.clocks, "initial": st.initial, "accepting": st.accepting},
    })
}
