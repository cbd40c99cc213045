//! Gridded sampling frame and plot geometry.
//!
//! Cells are indexed row-major from the frame origin: cell `index` sits at
//! `row = index / n_cols`, `col = index % n_cols`, and its center is
//! `origin + ((col + 0.5) * cell_side, (row + 0.5) * cell_side)`. Row 0 is the
//! row touching the origin (the bottom edge when y grows upwards).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn distance_sq(self, other: Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }
}

/// Axis-aligned rectangle `[x_min, x_max] x [y_min, y_max]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self> {
        let finite = [x_min, y_min, x_max, y_max].iter().all(|v| v.is_finite());
        if !finite || x_max <= x_min || y_max <= y_min {
            return Err(Error::Geometry(format!(
                "degenerate rectangle [{x_min}, {x_max}] x [{y_min}, {y_max}]"
            )));
        }
        Ok(Rect {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    /// The rectangle shrunk by `margin` on every side, if anything remains.
    pub fn inset(&self, margin: f64) -> Option<Rect> {
        let r = Rect {
            x_min: self.x_min + margin,
            y_min: self.y_min + margin,
            x_max: self.x_max - margin,
            y_max: self.y_max - margin,
        };
        (r.x_max >= r.x_min && r.y_max >= r.y_min).then_some(r)
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Rect {
        Rect {
            x_min: self.x_min + dx,
            y_min: self.y_min + dy,
            x_max: self.x_max + dx,
            y_max: self.y_max + dy,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFrame {
    n_cols: usize,
    n_rows: usize,
    cell_side: f64,
    origin: Point,
}

impl GridFrame {
    pub fn new(n_cols: usize, n_rows: usize, cell_side: f64, origin: Point) -> Result<Self> {
        if n_cols < 2 || n_rows < 2 {
            return Err(Error::InvalidFrame(format!(
                "frame must be at least 2x2 cells, got {n_cols}x{n_rows}"
            )));
        }
        if !(cell_side > 0.0 && cell_side.is_finite()) {
            return Err(Error::InvalidFrame(format!(
                "cell side must be positive and finite, got {cell_side}"
            )));
        }
        if !(origin.x.is_finite() && origin.y.is_finite()) {
            return Err(Error::InvalidFrame("origin must be finite".into()));
        }
        Ok(GridFrame {
            n_cols,
            n_rows,
            cell_side,
            origin,
        })
    }

    /// `side x side` cells tiling the unit square.
    pub fn unit_square(side: usize) -> Result<Self> {
        GridFrame::new(side, side, 1.0 / side as f64, Point::default())
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn cell_side(&self) -> f64 {
        self.cell_side
    }

    pub fn origin(&self) -> Point {
        self.origin
    }

    /// Number of cells, `N`.
    pub fn len(&self) -> usize {
        self.n_cols * self.n_rows
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn width(&self) -> f64 {
        self.n_cols as f64 * self.cell_side
    }

    pub fn height(&self) -> f64 {
        self.n_rows as f64 * self.cell_side
    }

    pub fn extent(&self) -> Rect {
        Rect {
            x_min: self.origin.x,
            y_min: self.origin.y,
            x_max: self.origin.x + self.width(),
            y_max: self.origin.y + self.height(),
        }
    }

    pub fn cell_area(&self) -> f64 {
        self.cell_side * self.cell_side
    }

    pub fn index(&self, row: usize, col: usize) -> Result<usize> {
        if row >= self.n_rows {
            return Err(Error::Index {
                what: "frame rows",
                index: row,
                len: self.n_rows,
            });
        }
        if col >= self.n_cols {
            return Err(Error::Index {
                what: "frame columns",
                index: col,
                len: self.n_cols,
            });
        }
        Ok(row * self.n_cols + col)
    }

    pub fn row_col(&self, index: usize) -> Result<(usize, usize)> {
        self.check(index)?;
        Ok((index / self.n_cols, index % self.n_cols))
    }

    pub fn center(&self, index: usize) -> Result<Point> {
        self.check(index)?;
        Ok(self.center_unchecked(index))
    }

    pub(crate) fn center_unchecked(&self, index: usize) -> Point {
        let row = index / self.n_cols;
        let col = index % self.n_cols;
        Point {
            x: self.origin.x + (col as f64 + 0.5) * self.cell_side,
            y: self.origin.y + (row as f64 + 0.5) * self.cell_side,
        }
    }

    pub fn centers(&self) -> Vec<Point> {
        (0..self.len()).map(|i| self.center_unchecked(i)).collect()
    }

    /// Euclidean distance between the centers of cells `i` and `j`.
    pub fn distance(&self, i: usize, j: usize) -> Result<f64> {
        self.check(i)?;
        self.check(j)?;
        Ok(self.distance_unchecked(i, j))
    }

    /// Distances are formed from integer cell offsets so that `d(i, j)` is
    /// exactly symmetric and exactly zero on the diagonal.
    pub(crate) fn distance_unchecked(&self, i: usize, j: usize) -> f64 {
        let dr = (i / self.n_cols).abs_diff(j / self.n_cols) as f64;
        let dc = (i % self.n_cols).abs_diff(j % self.n_cols) as f64;
        dr.hypot(dc) * self.cell_side
    }

    /// Cell containing `p`; points on an interior edge belong to the cell
    /// above/right of it, points on the outer max edge to the last cell.
    pub fn locate(&self, p: Point) -> Option<usize> {
        let fx = (p.x - self.origin.x) / self.cell_side;
        let fy = (p.y - self.origin.y) / self.cell_side;
        if !(fx >= 0.0 && fy >= 0.0 && fx <= self.n_cols as f64 && fy <= self.n_rows as f64) {
            return None;
        }
        let col = (fx.floor() as usize).min(self.n_cols - 1);
        let row = (fy.floor() as usize).min(self.n_rows - 1);
        Some(row * self.n_cols + col)
    }

    fn check(&self, index: usize) -> Result<()> {
        if index >= self.len() {
            return Err(Error::Index {
                what: "frame cells",
                index,
                len: self.len(),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircularPlot {
    pub center: Point,
    pub radius: f64,
}

impl CircularPlot {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Geometry(format!("plot radius must be positive, got {radius}")));
        }
        Ok(CircularPlot { center, radius })
    }

    /// Radius giving a plot of the requested area.
    pub fn radius_for_area(area: f64) -> f64 {
        (area / std::f64::consts::PI).sqrt()
    }

    pub fn area(&self) -> f64 {
        std::f64::consts::PI * self.radius * self.radius
    }

    pub fn bounding_box(&self) -> Rect {
        Rect {
            x_min: self.center.x - self.radius,
            y_min: self.center.y - self.radius,
            x_max: self.center.x + self.radius,
            y_max: self.center.y + self.radius,
        }
    }

    /// True when the disk lies inside `region` (tangency allowed).
    pub fn inside(&self, region: &Rect) -> bool {
        self.center.x - self.radius >= region.x_min
            && self.center.x + self.radius <= region.x_max
            && self.center.y - self.radius >= region.y_min
            && self.center.y + self.radius <= region.y_max
    }

    pub fn contains(&self, p: Point) -> bool {
        self.center.distance_sq(p) <= self.radius * self.radius
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_unit_square() {
        let f = GridFrame::new(100, 100, 0.01, Point::default()).unwrap();
        assert_eq!(f.len(), 10_000);
        assert!((f.width() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_by_two_centers() {
        let f = GridFrame::new(2, 2, 0.5, Point::default()).unwrap();
        let c: Vec<_> = (0..4).map(|i| f.center(i).unwrap()).collect();
        assert_eq!(
            c,
            vec![
                Point::new(0.25, 0.25),
                Point::new(0.75, 0.25),
                Point::new(0.25, 0.75),
                Point::new(0.75, 0.75)
            ]
        );
    }

    #[test]
    fn offset_origin() {
        let f = GridFrame::new(3, 2, 1.0, Point::new(10.0, 10.0)).unwrap();
        assert_eq!(f.len(), 6);
        assert_eq!(f.center(0).unwrap(), Point::new(10.5, 10.5));
    }

    #[test]
    fn invalid_frames() {
        assert!(matches!(
            GridFrame::new(1, 5, 1.0, Point::default()),
            Err(Error::InvalidFrame(_))
        ));
        assert!(GridFrame::new(5, 5, 0.0, Point::default()).is_err());
        assert!(GridFrame::new(5, 5, -1.0, Point::default()).is_err());
    }

    #[test]
    fn distances() {
        let f = GridFrame::new(100, 100, 0.01, Point::default()).unwrap();
        assert_eq!(f.distance(17, 17).unwrap(), 0.0);
        assert!((f.distance(0, 1).unwrap() - 0.01).abs() < 1e-15);
        assert!((f.distance(0, 100).unwrap() - 0.01).abs() < 1e-15);
        let g = GridFrame::new(3, 3, 1.0, Point::default()).unwrap();
        assert!((g.distance(0, 4).unwrap() - 2f64.sqrt()).abs() < 1e-12);
        assert!(matches!(f.distance(0, 10_000), Err(Error::Index { .. })));
    }

    #[test]
    fn index_bijection() {
        let f = GridFrame::new(7, 4, 1.0, Point::default()).unwrap();
        for i in 0..f.len() {
            let (r, c) = f.row_col(i).unwrap();
            assert_eq!(f.index(r, c).unwrap(), i);
            assert_eq!(f.locate(f.center(i).unwrap()), Some(i));
        }
        assert!(f.row_col(28).is_err());
    }

    #[test]
    fn hundred_square_metre_plot() {
        let r = CircularPlot::radius_for_area(100.0);
        assert!((r - 5.641_895_835_477_563).abs() < 1e-12);
        let p = CircularPlot::new(Point::default(), r).unwrap();
        assert!((p.area() - 100.0).abs() / 100.0 < 1e-9);
        assert!(CircularPlot::new(Point::default(), 0.0).is_err());
    }
}
