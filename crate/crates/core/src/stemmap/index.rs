//! Uniform bucket grid over tree positions.

use crate::frame::{CircularPlot, Point, Rect};

/// Buckets tree indices by position so disk queries touch only nearby trees.
#[derive(Clone, Debug)]
pub struct TreeIndex {
    region: Rect,
    bucket: f64,
    n_cols: usize,
    n_rows: usize,
    starts: Vec<usize>,
    members: Vec<usize>,
}

impl TreeIndex {
    /// Builds the index with square buckets of side `bucket`.
    pub fn new(region: Rect, points: &[Point], bucket: f64) -> Self {
        let bucket = if bucket > 0.0 { bucket } else { 10.0 };
        let n_cols = ((region.width() / bucket).ceil() as usize).max(1);
        let n_rows = ((region.height() / bucket).ceil() as usize).max(1);
        let cell_of = |p: &Point| {
            let c = (((p.x - region.x_min) / bucket).floor().max(0.0) as usize).min(n_cols - 1);
            let r = (((p.y - region.y_min) / bucket).floor().max(0.0) as usize).min(n_rows - 1);
            r * n_cols + c
        };
        let mut counts = vec![0usize; n_cols * n_rows + 1];
        for p in points {
            counts[cell_of(p) + 1] += 1;
        }
        for i in 1..counts.len() {
            counts[i] += counts[i - 1];
        }
        let starts = counts.clone();
        let mut fill = counts;
        let mut members = vec![0; points.len()];
        for (i, p) in points.iter().enumerate() {
            let b = cell_of(p);
            members[fill[b]] = i;
            fill[b] += 1;
        }
        TreeIndex {
            region,
            bucket,
            n_cols,
            n_rows,
            starts,
            members,
        }
    }

    /// Indices of points inside the closed disk, in ascending order.
    pub fn query(&self, points: &[Point], plot: &CircularPlot) -> Vec<usize> {
        let bb = plot.bounding_box();
        let span = |lo: f64, origin: f64, count: usize| {
            (((lo - origin) / self.bucket).floor().max(0.0) as usize).min(count - 1)
        };
        let c0 = span(bb.x_min, self.region.x_min, self.n_cols);
        let c1 = span(bb.x_max, self.region.x_min, self.n_cols);
        let r0 = span(bb.y_min, self.region.y_min, self.n_rows);
        let r1 = span(bb.y_max, self.region.y_min, self.n_rows);
        let mut out = Vec::new();
        for r in r0..=r1 {
            for c in c0..=c1 {
                let b = r * self.n_cols + c;
                for &i in &self.members[self.starts[b]..self.starts[b + 1]] {
                    if plot.contains(points[i]) {
                        out.push(i);
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// Reference query by scanning every point.
pub fn linear_scan(points: &[Point], plot: &CircularPlot) -> Vec<usize> {
    (0..points.len()).filter(|&i| plot.contains(points[i])).collect()
}
