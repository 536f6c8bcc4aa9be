//! Deterministic SVG figures for the result types.

use std::fmt::Write;

use crate::clustering::Partition;
use crate::data::Sample;
use crate::error::{ModalError, Result};
use crate::estimators::{DirectEstimate, ModeEstimate};
use crate::harness::RateReport;
use crate::multimodality::{ModeTree, PersistencePair, SizerMap, SizerState};
use crate::regression::ModalCurveSet;

pub const WIDTH: f64 = 800.0;
pub const HEIGHT: f64 = 600.0;
const MARGIN: f64 = 60.0;

pub const INCREASING: &str = "#2166ac";
pub const DECREASING: &str = "#b2182b";
pub const INCONCLUSIVE: &str = "#7b3294";
pub const SPARSE: &str = "#999999";
const CLUSTER_COLORS: [&str; 8] = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#1f78b4"];

/// A result that may be drawn.
pub enum Plot<'a> {
    Sizer(&'a SizerMap),
    Persistence(&'a [PersistencePair]),
    ModeTree(&'a ModeTree),
    ModalCurves(&'a ModalCurveSet),
    Partition { partition: &'a Partition, points: &'a Sample },
    Rate(&'a RateReport),
    DirectEstimate(&'a DirectEstimate),
    ModeEstimate(&'a ModeEstimate),
}

pub fn state_color(s: SizerState) -> &'static str {
    match s {
        SizerState::Increasing => INCREASING,
        SizerState::Decreasing => DECREASING,
        SizerState::Inconclusive => INCONCLUSIVE,
        SizerState::Sparse => SPARSE,
    }
}

/// Data window mapped onto the plotting area.
struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Self {
        Frame { x: padded(xs), y: padded(ys) }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn padded(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = v
        .filter(|x| x.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.5 * lo.abs().max(1.0) };
    (lo - pad, hi + pad)
}

struct Svg(String);

impl Svg {
    fn new(title: &str) -> Self {
        let mut s = String::new();
        let _ = write!(
            s,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n\
             <rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"#ffffff\"/>\n\
             <text x=\"{:.3}\" y=\"30.000\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{title}</text>\n",
            WIDTH / 2.0
        );
        Svg(s)
    }

    fn axes(&mut self, f: &Frame, xlabel: &str, ylabel: &str) {
        let (l, r, t, b) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
        let _ = writeln!(
            self.0,
            "<rect x=\"{l:.3}\" y=\"{t:.3}\" width=\"{:.3}\" height=\"{:.3}\" fill=\"none\" stroke=\"#000000\"/>",
            r - l,
            b - t
        );
        for (v, anchor, x) in [(f.x.0, "start", l), (f.x.1, "end", r)] {
            let _ = writeln!(self.0, "<text x=\"{x:.3}\" y=\"{:.3}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"{anchor}\">{v:.3}</text>", b + 16.0);
        }
        for (v, y) in [(f.y.0, b), (f.y.1, t + 10.0)] {
            let _ = writeln!(self.0, "<text x=\"{:.3}\" y=\"{y:.3}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{v:.3}</text>", l - 4.0);
        }
        let _ = writeln!(self.0, "<text x=\"{:.3}\" y=\"{:.3}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">{xlabel}</text>", WIDTH / 2.0, HEIGHT - 15.0);
        let _ = writeln!(
            self.0,
            "<text x=\"18.000\" y=\"{:.3}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18.000 {:.3})\">{ylabel}</text>",
            HEIGHT / 2.0,
            HEIGHT / 2.0
        );
    }

    fn circle(&mut self, x: f64, y: f64, r: f64, fill: &str) {
        let _ = writeln!(self.0, "<circle cx=\"{x:.3}\" cy=\"{y:.3}\" r=\"{r:.3}\" fill=\"{fill}\"/>");
    }

    fn line(&mut self, a: (f64, f64), b: (f64, f64), stroke: &str, dash: bool) {
        let d = if dash { " stroke-dasharray=\"6 4\"" } else { "" };
        let _ = writeln!(
            self.0,
            "<line x1=\"{:.3}\" y1=\"{:.3}\" x2=\"{:.3}\" y2=\"{:.3}\" stroke=\"{stroke}\" stroke-width=\"1.5\"{d}/>",
            a.0, a.1, b.0, b.1
        );
    }

    fn polyline(&mut self, pts: &[(f64, f64)], stroke: &str, dash: bool) {
        if pts.len() < 2 {
            if let Some(p) = pts.first() {
                self.circle(p.0, p.1, 2.0, stroke);
            }
            return;
        }
        let coords: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.3},{y:.3}")).collect();
        let d = if dash { " stroke-dasharray=\"6 4\"" } else { "" };
        let _ = writeln!(self.0, "<polyline points=\"{}\" fill=\"none\" stroke=\"{stroke}\" stroke-width=\"2\"{d}/>", coords.join(" "));
    }

    fn finish(mut self) -> String {
        self.0.push_str("</svg>\n");
        self.0
    }
}

pub fn render_plot(plot: &Plot) -> Result<String> {
    match plot {
        Plot::Sizer(m) => Ok(sizer(m)),
        Plot::Persistence(p) => Ok(persistence(p)),
        Plot::ModeTree(t) => Ok(mode_tree(t)),
        Plot::ModalCurves(c) => Ok(curves(c)),
        Plot::Partition { partition, points } => partition_plot(partition, points),
        Plot::Rate(r) => Ok(rate(r)),
        Plot::DirectEstimate(_) | Plot::ModeEstimate(_) => {
            Err(ModalError::Unsupported("no figure for a single mode estimate".into()))
        }
    }
}

fn sizer(m: &SizerMap) -> String {
    let mut svg = Svg::new("SiZer map");
    let (nx, nh) = m.shape();
    let lh: Vec<f64> = m.h_grid.iter().map(|h| h.log10()).collect();
    let f = Frame { x: padded(m.x_grid.iter().copied()), y: padded(lh.iter().copied()) };
    // rows drawn by rank of log h, smallest at the bottom
    let mut rank: Vec<usize> = (0..nh).collect();
    rank.sort_by(|a, b| lh[*a].total_cmp(&lh[*b]).then(a.cmp(b)));
    let (cw, ch) = ((WIDTH - 2.0 * MARGIN) / nx as f64, (HEIGHT - 2.0 * MARGIN) / nh as f64);
    for (pos, &hi) in rank.iter().enumerate() {
        let y = HEIGHT - MARGIN - (pos + 1) as f64 * ch;
        for xi in 0..nx {
            let x = MARGIN + xi as f64 * cw;
            let _ = writeln!(
                svg.0,
                "<rect x=\"{x:.3}\" y=\"{y:.3}\" width=\"{cw:.3}\" height=\"{ch:.3}\" fill=\"{}\"/>",
                state_color(m.state(xi, hi))
            );
        }
    }
    svg.axes(&f, "x", "log10 h");
    svg.finish()
}

fn persistence(pairs: &[PersistencePair]) -> String {
    let mut svg = Svg::new("Persistence diagram");
    let all = pairs.iter().flat_map(|p| [p.death, p.birth]);
    let span = padded(all);
    let f = Frame { x: span, y: span };
    svg.line((f.px(span.0), f.py(span.0)), (f.px(span.1), f.py(span.1)), "#888888", true);
    for p in pairs {
        svg.circle(f.px(p.death), f.py(p.birth), 4.0, INCREASING);
    }
    svg.axes(&f, "death", "birth");
    svg.finish()
}

fn mode_tree(t: &ModeTree) -> String {
    let mut svg = Svg::new("Mode tree");
    let f = Frame::new(
        t.levels.iter().flat_map(|l| l.modes.iter().copied()),
        t.bandwidths.iter().map(|h| h.log10()),
    );
    for (i, l) in t.levels.iter().enumerate() {
        let y = f.py(l.bandwidth.log10());
        for (k, m) in l.modes.iter().enumerate() {
            if let (Some(p), Some(prev)) = (l.parents[k], i.checked_sub(1).map(|j| &t.levels[j])) {
                svg.line((f.px(*m), y), (f.px(prev.modes[p]), f.py(prev.bandwidth.log10())), "#000000", false);
            }
            svg.circle(f.px(*m), y, 2.5, "#000000");
        }
    }
    svg.axes(&f, "mode location", "log10 h");
    svg.finish()
}

fn curves(c: &ModalCurveSet) -> String {
    let mut svg = Svg::new("Modal regression");
    let ys = c
        .branches
        .iter()
        .flat_map(|b| b.points.iter().map(|p| p.y))
        .chain(c.mean_curve.iter().flatten().copied());
    let f = Frame::new(c.x_grid.iter().copied(), ys);
    for b in &c.branches {
        let pts: Vec<(f64, f64)> = b.points.iter().map(|p| (f.px(p.x), f.py(p.y))).collect();
        svg.polyline(&pts, DECREASING, false);
    }
    // mean curve, broken at undefined points
    let mut run: Vec<(f64, f64)> = Vec::new();
    for (x, m) in c.x_grid.iter().zip(&c.mean_curve) {
        match m {
            Some(m) => run.push((f.px(*x), f.py(*m))),
            None => {
                svg.polyline(&run, INCREASING, true);
                run.clear();
            }
        }
    }
    svg.polyline(&run, INCREASING, true);
    svg.axes(&f, "x", "y");
    svg.finish()
}

fn partition_plot(p: &Partition, points: &Sample) -> Result<String> {
    if points.len() != p.labels.len() {
        return Err(ModalError::DimensionMismatch { expected: p.labels.len(), found: points.len() });
    }
    let mut svg = Svg::new("Partition");
    let d = points.dim();
    // 1-d data are spread vertically by cluster
    let coord = |i: usize| -> (f64, f64) {
        let q = points.point(i);
        if d == 1 {
            (q[0], p.labels[i].map_or(0.0, |l| l as f64))
        } else {
            (q[0], q[1])
        }
    };
    let f = Frame::new((0..points.len()).map(|i| coord(i).0), (0..points.len()).map(|i| coord(i).1));
    for i in 0..points.len() {
        let (x, y) = coord(i);
        let color = p.labels[i].map_or(SPARSE, |l| CLUSTER_COLORS[(l - 1) % CLUSTER_COLORS.len()]);
        svg.circle(f.px(x), f.py(y), 2.0, color);
    }
    for (l, r) in p.representatives.iter().enumerate() {
        let (x, y) = if d == 1 { (r[0], (l + 1) as f64) } else { (r[0], r[1]) };
        let (cx, cy) = (f.px(x), f.py(y));
        svg.line((cx - 6.0, cy - 6.0), (cx + 6.0, cy + 6.0), "#000000", false);
        svg.line((cx - 6.0, cy + 6.0), (cx + 6.0, cy - 6.0), "#000000", false);
    }
    svg.axes(&f, "x1", if d == 1 { "cluster" } else { "x2" });
    Ok(svg.finish())
}

fn rate(r: &RateReport) -> String {
    let mut svg = Svg::new("Monte Carlo RMSE");
    let lx: Vec<f64> = r.n_grid.iter().map(|n| (*n as f64).log10()).collect();
    let ly: Vec<f64> = r.rmse.iter().map(|e| e.log10()).collect();
    let f = Frame::new(lx.iter().copied(), ly.iter().copied());
    let (mx, my) = (lx.iter().sum::<f64>() / lx.len() as f64, ly.iter().sum::<f64>() / ly.len() as f64);
    let fit = |x: f64| my + r.slope * (x - mx);
    let (a, b) = (lx[0], lx[lx.len() - 1]);
    svg.line((f.px(a), f.py(fit(a))), (f.px(b), f.py(fit(b))), DECREASING, true);
    for (x, y) in lx.iter().zip(&ly) {
        svg.circle(f.px(*x), f.py(*y), 4.0, INCREASING);
    }
    svg.axes(&f, "log10 n", "log10 RMSE");
    svg.finish()
}
