//! Sampling designs: simple random sampling without replacement and
//! single-start systematic lattices, on the finite grid frame and as
//! circular-plot designs over a continuous region.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{GridFrame, Point, Rect};
use crate::rng::Stream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DesignTag {
    #[serde(rename = "SRS")]
    Srs,
    #[serde(rename = "SYS")]
    Sys,
}

impl fmt::Display for DesignTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DesignTag::Srs => "SRS",
            DesignTag::Sys => "SYS",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SampleUnits {
    /// Cell indices into a finite frame.
    Cells(Vec<usize>),
    /// Plot centers in a continuous region.
    Plots(Vec<Point>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleDraw {
    pub design: DesignTag,
    pub units: SampleUnits,
    pub start_id: Option<usize>,
}

impl SampleDraw {
    pub fn len(&self) -> usize {
        match &self.units {
            SampleUnits::Cells(c) => c.len(),
            SampleUnits::Plots(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cells(&self) -> Option<&[usize]> {
        match &self.units {
            SampleUnits::Cells(c) => Some(c),
            SampleUnits::Plots(_) => None,
        }
    }

    pub fn plots(&self) -> Option<&[Point]> {
        match &self.units {
            SampleUnits::Plots(p) => Some(p),
            SampleUnits::Cells(_) => None,
        }
    }
}

/// Simple random sample of `n` distinct cells.
pub fn srs_draw(frame: &GridFrame, n: usize, stream: &mut Stream) -> Result<SampleDraw> {
    srs_indices(frame.len(), n, stream).map(|cells| SampleDraw {
        design: DesignTag::Srs,
        units: SampleUnits::Cells(cells),
        start_id: None,
    })
}

pub(crate) fn srs_indices(population: usize, n: usize, stream: &mut Stream) -> Result<Vec<usize>> {
    if n < 2 || n > population {
        return Err(Error::Design(format!(
            "simple random sample size must satisfy 2 <= n <= N = {population}, got {n}"
        )));
    }
    Ok(rand::seq::index::sample(stream, population, n).into_vec())
}

/// Geometry of a `k_cols x k_rows` systematic lattice on a frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystematicLayout {
    pub n_cols: usize,
    pub n_rows: usize,
    pub k_cols: usize,
    pub k_rows: usize,
    pub spacing_x: usize,
    pub spacing_y: usize,
}

impl SystematicLayout {
    pub fn n(&self) -> usize {
        self.k_cols * self.k_rows
    }

    /// Number of distinct samples, `N / n`.
    pub fn num_starts(&self) -> usize {
        self.spacing_x * self.spacing_y
    }

    /// Start `start_id` maps row-major onto the offset `(ox, oy)` within the
    /// first spacing cell.
    pub fn offset(&self, start_id: usize) -> Result<(usize, usize)> {
        if start_id >= self.num_starts() {
            return Err(Error::Index {
                what: "systematic starts",
                index: start_id,
                len: self.num_starts(),
            });
        }
        Ok((start_id % self.spacing_x, start_id / self.spacing_x))
    }

    pub fn draw(&self, start_id: usize) -> Result<SampleDraw> {
        let (ox, oy) = self.offset(start_id)?;
        let mut cells = Vec::with_capacity(self.n());
        for b in 0..self.k_rows {
            let row = oy + b * self.spacing_y;
            for a in 0..self.k_cols {
                cells.push(row * self.n_cols + ox + a * self.spacing_x);
            }
        }
        Ok(SampleDraw {
            design: DesignTag::Sys,
            units: SampleUnits::Cells(cells),
            start_id: Some(start_id),
        })
    }

    pub fn enumerate(&self) -> impl Iterator<Item = SampleDraw> + '_ {
        (0..self.num_starts()).map(|s| self.draw(s).expect("start in range"))
    }
}

pub fn systematic_layout(frame: &GridFrame, k_cols: usize, k_rows: usize) -> Result<SystematicLayout> {
    layout_for(frame.n_cols(), frame.n_rows(), k_cols, k_rows)
}

pub(crate) fn layout_for(n_cols: usize, n_rows: usize, k_cols: usize, k_rows: usize) -> Result<SystematicLayout> {
    if k_cols == 0 || k_rows == 0 {
        return Err(Error::Layout(format!("lattice dimensions must be positive, got {k_cols}x{k_rows}")));
    }
    if n_cols % k_cols != 0 || n_rows % k_rows != 0 {
        return Err(Error::Layout(format!(
            "a {k_cols}x{k_rows} lattice on a {n_cols}x{n_rows} frame needs spacing {} x {}, which is not integral",
            fmt_ratio(n_cols, k_cols),
            fmt_ratio(n_rows, k_rows)
        )));
    }
    Ok(SystematicLayout {
        n_cols,
        n_rows,
        k_cols,
        k_rows,
        spacing_x: n_cols / k_cols,
        spacing_y: n_rows / k_rows,
    })
}

fn fmt_ratio(a: usize, b: usize) -> String {
    if a % b == 0 {
        (a / b).to_string()
    } else {
        format!("{:.2}", a as f64 / b as f64)
    }
}

pub fn enumerate_systematic(layout: &SystematicLayout) -> Vec<SampleDraw> {
    layout.enumerate().collect()
}

/// Default cap on rejection-sampling attempts per requested plot.
pub const PLOT_ATTEMPTS_PER_PLOT: usize = 10_000;

/// `n` non-overlapping plots placed uniformly at random, each clearing the
/// region boundary. Candidates are rejected until all fit or `max_attempts`
/// candidates have been tried.
pub fn plot_srs_draw(
    region: &Rect,
    radius: f64,
    n: usize,
    stream: &mut Stream,
    max_attempts: usize,
) -> Result<SampleDraw> {
    if radius.is_nan() || radius <= 0.0 {
        return Err(Error::Design(format!("plot radius must be positive, got {radius}")));
    }
    if n == 0 {
        return Err(Error::Design("plot sample size must be positive".into()));
    }
    let inner = region.inset(radius).ok_or_else(|| Error::Packing {
        achieved: 0,
        requested: n,
        reason: format!("region cannot contain a plot of radius {radius}"),
    })?;
    let min_sq = 4.0 * radius * radius;
    let mut centers: Vec<Point> = Vec::with_capacity(n);
    let mut attempts = 0;
    while centers.len() < n {
        if attempts >= max_attempts {
            return Err(Error::Packing {
                achieved: centers.len(),
                requested: n,
                reason: format!("{max_attempts} attempts exhausted"),
            });
        }
        attempts += 1;
        let c = Point::new(
            inner.x_min + stream.random::<f64>() * inner.width(),
            inner.y_min + stream.random::<f64>() * inner.height(),
        );
        if centers.iter().all(|q| q.distance_sq(c) >= min_sq) {
            centers.push(c);
        }
    }
    Ok(SampleDraw {
        design: DesignTag::Srs,
        units: SampleUnits::Plots(centers),
        start_id: None,
    })
}

/// Lattice spacing of a `k_cols x k_rows` plot layout, checked against the
/// plot radius.
pub fn plot_lattice_spacing(region: &Rect, radius: f64, k_cols: usize, k_rows: usize) -> Result<(f64, f64)> {
    if k_cols == 0 || k_rows == 0 {
        return Err(Error::Layout(format!("lattice dimensions must be positive, got {k_cols}x{k_rows}")));
    }
    let sx = region.width() / k_cols as f64;
    let sy = region.height() / k_rows as f64;
    if sx < 2.0 * radius || sy < 2.0 * radius {
        return Err(Error::Packing {
            achieved: 0,
            requested: k_cols * k_rows,
            reason: format!("lattice spacing {sx} x {sy} is smaller than the plot diameter {}", 2.0 * radius),
        });
    }
    Ok((sx, sy))
}

/// Regular plot lattice from one random start. The offset within the first
/// spacing cell is uniform over the part of that cell that keeps every plot
/// at least `radius` from the region boundary: `o = r + u (s - 2r)`.
pub fn plot_systematic_draw(
    region: &Rect,
    radius: f64,
    k_cols: usize,
    k_rows: usize,
    stream: &mut Stream,
) -> Result<SampleDraw> {
    let u = (stream.random::<f64>(), stream.random::<f64>());
    plot_systematic_at(region, radius, k_cols, k_rows, u)
}

/// Deterministic lattice for a unit-square offset `u`.
pub fn plot_systematic_at(
    region: &Rect,
    radius: f64,
    k_cols: usize,
    k_rows: usize,
    u: (f64, f64),
) -> Result<SampleDraw> {
    let (sx, sy) = plot_lattice_spacing(region, radius, k_cols, k_rows)?;
    let ox = radius + u.0 * (sx - 2.0 * radius);
    let oy = radius + u.1 * (sy - 2.0 * radius);
    let mut centers = Vec::with_capacity(k_cols * k_rows);
    for b in 0..k_rows {
        for a in 0..k_cols {
            centers.push(Point::new(
                region.x_min + ox + a as f64 * sx,
                region.y_min + oy + b as f64 * sy,
            ));
        }
    }
    Ok(SampleDraw {
        design: DesignTag::Sys,
        units: SampleUnits::Plots(centers),
        start_id: None,
    })
}

/// Writes draws as `replicate_id,design,unit_id,x,y`; cell draws carry the
/// cell index and center, plot draws only the center.
pub fn write_draws_csv<W: std::io::Write>(
    writer: W,
    frame: Option<&GridFrame>,
    draws: &[(usize, SampleDraw)],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["replicate_id", "design", "unit_id", "x", "y"])?;
    for (rep, draw) in draws {
        match &draw.units {
            SampleUnits::Cells(cells) => {
                for &c in cells {
                    let (x, y) = match frame {
                        Some(f) => {
                            let p = f.center(c)?;
                            (p.x.to_string(), p.y.to_string())
                        }
                        None => (String::new(), String::new()),
                    };
                    w.write_record(&[rep.to_string(), draw.design.to_string(), c.to_string(), x, y])?;
                }
            }
            SampleUnits::Plots(centers) => {
                for p in centers {
                    w.write_record(&[
                        rep.to_string(),
                        draw.design.to_string(),
                        String::new(),
                        p.x.to_string(),
                        p.y.to_string(),
                    ])?;
                }
            }
        }
    }
    w.flush().map_err(|e| Error::io("draws csv", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn frame(c: usize, r: usize) -> GridFrame {
        GridFrame::new(c, r, 1.0, Point::default()).unwrap()
    }

    #[test]
    fn srs_full_frame() {
        let f = frame(4, 5);
        let d = srs_draw(&f, 20, &mut rng::stream(1, &[])).unwrap();
        let mut c = d.cells().unwrap().to_vec();
        c.sort_unstable();
        assert_eq!(c, (0..20).collect::<Vec<_>>());
    }

    #[test]
    fn srs_paper_size() {
        let f = GridFrame::unit_square(100).unwrap();
        let d = srs_draw(&f, 25, &mut rng::stream(2, &[])).unwrap();
        let mut c = d.cells().unwrap().to_vec();
        assert_eq!(c.len(), 25);
        assert!(c.iter().all(|&i| i < 10_000));
        c.sort_unstable();
        c.dedup();
        assert_eq!(c.len(), 25);
    }

    #[test]
    fn srs_rejects_bad_sizes() {
        let f = frame(3, 3);
        assert!(matches!(srs_draw(&f, 10, &mut rng::stream(1, &[])), Err(Error::Design(_))));
        assert!(srs_draw(&f, 1, &mut rng::stream(1, &[])).is_err());
    }

    #[test]
    fn layouts() {
        let f = GridFrame::unit_square(100).unwrap();
        let l = systematic_layout(&f, 5, 5).unwrap();
        assert_eq!((l.spacing_x, l.spacing_y, l.num_starts()), (20, 20, 400));
        let l = systematic_layout(&f, 10, 10).unwrap();
        assert_eq!((l.spacing_x, l.spacing_y, l.num_starts()), (10, 10, 100));
        let hf = systematic_layout(&frame(50, 70), 5, 7).unwrap();
        assert_eq!((hf.spacing_x, hf.spacing_y, hf.num_starts()), (10, 10, 100));
        let err = systematic_layout(&f, 5, 6).unwrap_err();
        assert!(err.to_string().contains("16.67"), "{err}");
    }

    #[test]
    fn start_zero_on_four_by_four() {
        let f = frame(4, 4);
        let l = systematic_layout(&f, 2, 2).unwrap();
        let d = l.draw(0).unwrap();
        let rc: Vec<(usize, usize)> = d.cells().unwrap().iter().map(|&i| (i % 4, i / 4)).collect();
        assert_eq!(rc, vec![(0, 0), (2, 0), (0, 2), (2, 2)]);
        assert!(matches!(l.draw(4), Err(Error::Index { .. })));
    }

    #[test]
    fn enumeration_partitions_frame() {
        for (c, r, kc, kr) in [(6, 6, 3, 3), (2, 2, 1, 1), (10, 14, 5, 7), (12, 8, 3, 2)] {
            let f = frame(c, r);
            let l = systematic_layout(&f, kc, kr).unwrap();
            let draws = enumerate_systematic(&l);
            assert_eq!(draws.len(), l.num_starts());
            let mut seen = vec![0u32; f.len()];
            for d in &draws {
                assert_eq!(d.len(), kc * kr);
                for &i in d.cells().unwrap() {
                    seen[i] += 1;
                }
            }
            assert!(seen.iter().all(|&s| s == 1));
        }
    }

    #[test]
    fn lattice_minimum_spacing() {
        let f = GridFrame::unit_square(100).unwrap();
        let l = systematic_layout(&f, 5, 5).unwrap();
        for s in [0, 17, 399] {
            let d = l.draw(s).unwrap();
            let c = d.cells().unwrap();
            let mut min = f64::INFINITY;
            for i in 0..c.len() {
                for j in i + 1..c.len() {
                    min = min.min(f.distance(c[i], c[j]).unwrap());
                }
            }
            assert!((min - 0.2).abs() < 1e-12);
        }
    }

    fn check_plots(region: &Rect, radius: f64, d: &SampleDraw) {
        let p = d.plots().unwrap();
        for (i, a) in p.iter().enumerate() {
            assert!(a.x - radius >= region.x_min && a.x + radius <= region.x_max);
            assert!(a.y - radius >= region.y_min && a.y + radius <= region.y_max);
            for b in &p[i + 1..] {
                assert!(a.distance(*b) >= 2.0 * radius);
            }
        }
    }

    #[test]
    fn plot_srs_constraints_hold() {
        let region = Rect::new(0.0, 0.0, 500.0, 700.0).unwrap();
        let r = (100.0 / std::f64::consts::PI).sqrt();
        for rep in 0..1000 {
            let d = plot_srs_draw(&region, r, 35, &mut rng::stream(3, &[rep]), 35 * PLOT_ATTEMPTS_PER_PLOT).unwrap();
            assert_eq!(d.len(), 35);
            check_plots(&region, r, &d);
        }
        let one = plot_srs_draw(&region, r, 1, &mut rng::stream(3, &[]), 10).unwrap();
        assert_eq!(one.len(), 1);
    }

    #[test]
    fn plot_srs_reports_packing_failure() {
        let region = Rect::new(0.0, 0.0, 10.0, 10.0).unwrap();
        let err = plot_srs_draw(&region, 2.0, 10, &mut rng::stream(1, &[]), 5000).unwrap_err();
        match err {
            Error::Packing { achieved, requested, .. } => {
                assert!(achieved < 10);
                assert_eq!(requested, 10);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn plot_systematic_lattices() {
        let region = Rect::new(0.0, 0.0, 500.0, 700.0).unwrap();
        let r = (100.0 / std::f64::consts::PI).sqrt();
        assert_eq!(plot_lattice_spacing(&region, r, 5, 7).unwrap(), (100.0, 100.0));
        assert_eq!(plot_lattice_spacing(&region, r, 10, 14).unwrap(), (50.0, 50.0));
        for rep in 0..200 {
            let d = plot_systematic_draw(&region, r, 10, 14, &mut rng::stream(4, &[rep])).unwrap();
            assert_eq!(d.len(), 140);
            check_plots(&region, r, &d);
        }
        let zero = plot_systematic_at(&region, r, 5, 7, (0.0, 0.0)).unwrap();
        let p = zero.plots().unwrap();
        assert_eq!(p[0], Point::new(r, r));
        assert_eq!(p[1], Point::new(r + 100.0, r));
        assert_eq!(p[5], Point::new(r, r + 100.0));
        assert!(plot_lattice_spacing(&region, 60.0, 5, 7).is_err());
    }

    #[test]
    fn draws_csv() {
        let f = frame(4, 4);
        let l = systematic_layout(&f, 2, 2).unwrap();
        let mut buf = Vec::new();
        write_draws_csv(&mut buf, Some(&f), &[(0, l.draw(1).unwrap())]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("replicate_id,design,unit_id,x,y\n0,SYS,1,1.5,0.5\n"));
    }
}
