//! Delimited-text formats for stem maps and rasters.
//!
//! A stem map is a table with a header row holding at least `x`, `y` and
//! `agb` columns (other columns are ignored), e.g.
//!
//! ```text
//! tree_id,x,y,agb
//! 1,12.5,40.1,230.4
//! ```
//!
//! next to a sidecar `<name>.meta.toml`:
//!
//! ```toml
//! delimiter = ","
//! length_unit = "m"
//! mass_unit = "kg"
//! [region]
//! x_min = 0.0
//! y_min = 0.0
//! x_max = 500.0
//! y_max = 700.0
//! ```
//!
//! A raster is a wide table `col,row,<layer>...` with one line per cell
//! (row 0 is the bottom row), with a sidecar giving the grid:
//!
//! ```toml
//! delimiter = ","
//! n_cols = 50
//! n_rows = 70
//! cell_side = 10.0
//! origin_x = 0.0
//! origin_y = 0.0
//! ```

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{CovariateRaster, StemMap, Tree};
use crate::error::{Error, Result};
use crate::frame::{GridFrame, Point, Rect};

/// `stems.csv` -> `stems.meta.toml`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("meta.toml")
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum MassUnit {
    #[serde(rename = "g")]
    Gram,
    #[default]
    #[serde(rename = "kg")]
    Kilogram,
    #[serde(rename = "Mg")]
    Megagram,
}

impl MassUnit {
    fn to_kg(self) -> f64 {
        match self {
            MassUnit::Gram => 1e-3,
            MassUnit::Kilogram => 1.0,
            MassUnit::Megagram => super::units::KG_PER_MG,
        }
    }
}

fn default_delimiter() -> char {
    ','
}

fn default_length_unit() -> String {
    "m".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StemMapMeta {
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    #[serde(default = "default_length_unit")]
    pub length_unit: String,
    #[serde(default)]
    pub mass_unit: MassUnit,
    pub region: Rect,
}

impl StemMapMeta {
    pub fn new(region: Rect) -> Self {
        StemMapMeta {
            delimiter: ',',
            length_unit: default_length_unit(),
            mass_unit: MassUnit::Kilogram,
            region,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RasterMeta {
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    pub n_cols: usize,
    pub n_rows: usize,
    pub cell_side: f64,
    #[serde(default)]
    pub origin_x: f64,
    #[serde(default)]
    pub origin_y: f64,
}

impl RasterMeta {
    pub fn for_grid(grid: &GridFrame) -> Self {
        RasterMeta {
            delimiter: ',',
            n_cols: grid.n_cols(),
            n_rows: grid.n_rows(),
            cell_side: grid.cell_side(),
            origin_x: grid.origin().x,
            origin_y: grid.origin().y,
        }
    }
}

fn ingest(path: &str, row: usize, message: impl Into<String>) -> Error {
    Error::Ingestion {
        path: path.to_string(),
        row,
        message: message.into(),
    }
}

fn read_meta<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let meta_path = sidecar_path(path);
    let text = std::fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    toml::from_str(&text).map_err(|e| ingest(&meta_path.display().to_string(), 0, e.to_string()))
}

fn delimiter_byte(source: &str, c: char) -> Result<u8> {
    if c.is_ascii() {
        Ok(c as u8)
    } else {
        Err(ingest(source, 0, format!("delimiter {c:?} is not a single ASCII character")))
    }
}

fn column_indices(source: &str, headers: &csv::StringRecord, wanted: &[&str]) -> Result<Vec<usize>> {
    let names: Vec<&str> = headers.iter().map(str::trim).collect();
    let missing: Vec<&str> = wanted.iter().copied().filter(|w| !names.contains(w)).collect();
    if !missing.is_empty() {
        return Err(ingest(
            source,
            1,
            format!("missing column(s) {}; header has {}", missing.join(", "), names.join(", ")),
        ));
    }
    Ok(wanted.iter().map(|w| names.iter().position(|n| n == w).unwrap()).collect())
}

fn parse_field(source: &str, line: usize, record: &csv::StringRecord, idx: usize, name: &str) -> Result<f64> {
    let raw = record.get(idx).unwrap_or("").trim();
    raw.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| ingest(source, line, format!("column {name}: `{raw}` is not a finite number")))
}

/// Loads `path` and its sidecar.
pub fn load_stemmap(path: &Path) -> Result<StemMap> {
    let meta: StemMapMeta = read_meta(path)?;
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    stemmap_from_reader(BufReader::new(file), &meta, &path.display().to_string())
}

/// Parses stem-map text; `source` names the input in diagnostics.
pub fn stemmap_from_reader<R: Read>(reader: R, meta: &StemMapMeta, source: &str) -> Result<StemMap> {
    if meta.length_unit != "m" {
        return Err(ingest(source, 0, format!("length unit must be m, got {}", meta.length_unit)));
    }
    let region = Rect::new(meta.region.x_min, meta.region.y_min, meta.region.x_max, meta.region.y_max)?;
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter_byte(source, meta.delimiter)?)
        .has_headers(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let idx = column_indices(source, &headers, &["x", "y", "agb"])?;
    let to_kg = meta.mass_unit.to_kg();
    let mut trees = Vec::new();
    let mut outside: Vec<usize> = Vec::new();
    let mut record = csv::StringRecord::new();
    loop {
        let more = rdr
            .read_record(&mut record)
            .map_err(|e| ingest(source, e.position().map_or(0, |p| p.line() as usize), e.to_string()))?;
        if !more {
            break;
        }
        let line = record.position().map_or(0, |p| p.line() as usize);
        let x = parse_field(source, line, &record, idx[0], "x")?;
        let y = parse_field(source, line, &record, idx[1], "y")?;
        let agb = parse_field(source, line, &record, idx[2], "agb")?;
        if agb < 0.0 {
            return Err(ingest(source, line, format!("agb {agb} is negative")));
        }
        if !region.contains(Point::new(x, y)) {
            outside.push(line);
        }
        trees.push(Tree { x, y, agb: agb * to_kg });
    }
    if let Some(&first) = outside.first() {
        let more = if outside.len() > 1 {
            format!(" ({} rows in total, first lines: {:?})", outside.len(), &outside[..outside.len().min(10)])
        } else {
            String::new()
        };
        return Err(ingest(
            source,
            first,
            format!(
                "tree outside region [{}, {}] x [{}, {}]{more}",
                region.x_min, region.x_max, region.y_min, region.y_max
            ),
        ));
    }
    StemMap::new(region, trees)
}

/// Writes `path` and its sidecar.
pub fn write_stemmap(path: &Path, stemmap: &StemMap) -> Result<()> {
    let meta = StemMapMeta::new(stemmap.region());
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(["tree_id", "x", "y", "agb"])?;
    for (i, t) in stemmap.trees().iter().enumerate() {
        w.write_record(&[i.to_string(), t.x.to_string(), t.y.to_string(), t.agb.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    write_meta(path, &meta)
}

fn write_meta<T: Serialize>(path: &Path, meta: &T) -> Result<()> {
    let meta_path = sidecar_path(path);
    let text = toml::to_string(meta).map_err(|e| Error::Config(e.to_string()))?;
    let mut f = File::create(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(&meta_path, e))
}

pub fn load_raster(path: &Path) -> Result<CovariateRaster> {
    let meta: RasterMeta = read_meta(path)?;
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    raster_from_reader(BufReader::new(file), &meta, &path.display().to_string())
}

pub fn raster_from_reader<R: Read>(reader: R, meta: &RasterMeta, source: &str) -> Result<CovariateRaster> {
    let grid = GridFrame::new(meta.n_cols, meta.n_rows, meta.cell_side, Point::new(meta.origin_x, meta.origin_y))?;
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter_byte(source, meta.delimiter)?)
        .has_headers(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let idx = column_indices(source, &headers, &["col", "row"])?;
    let layer_cols: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| !idx.contains(i))
        .map(|(i, h)| (i, h.trim().to_string()))
        .collect();
    if layer_cols.is_empty() {
        return Err(ingest(source, 1, "no layer columns besides col and row"));
    }
    let mut values = vec![vec![f64::NAN; grid.len()]; layer_cols.len()];
    let mut seen = vec![false; grid.len()];
    let mut record = csv::StringRecord::new();
    loop {
        let more = rdr
            .read_record(&mut record)
            .map_err(|e| ingest(source, e.position().map_or(0, |p| p.line() as usize), e.to_string()))?;
        if !more {
            break;
        }
        let line = record.position().map_or(0, |p| p.line() as usize);
        let cell = |k: usize, name: &str| -> Result<usize> {
            let raw = record.get(idx[k]).unwrap_or("").trim();
            raw.parse::<usize>()
                .map_err(|_| ingest(source, line, format!("column {name}: `{raw}` is not a cell index")))
        };
        let (c, r) = (cell(0, "col")?, cell(1, "row")?);
        let i = grid
            .index(r, c)
            .map_err(|_| ingest(source, line, format!("cell (col {c}, row {r}) is outside the {}x{} grid", meta.n_cols, meta.n_rows)))?;
        if seen[i] {
            return Err(ingest(source, line, format!("cell (col {c}, row {r}) appears twice")));
        }
        seen[i] = true;
        for (k, (j, name)) in layer_cols.iter().enumerate() {
            values[k][i] = parse_field(source, line, &record, *j, name)?;
        }
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        let (r, c) = grid.row_col(i)?;
        return Err(ingest(
            source,
            0,
            format!(
                "{} cells missing, first is (col {c}, row {r})",
                seen.iter().filter(|s| !**s).count()
            ),
        ));
    }
    let layers: BTreeMap<String, Vec<f64>> = layer_cols.into_iter().map(|(_, n)| n).zip(values).collect();
    CovariateRaster::new(grid, layers)
}

pub fn write_raster(path: &Path, raster: &CovariateRaster) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let names: Vec<&str> = raster.layer_names().collect();
    let mut header = vec!["col", "row"];
    header.extend(&names);
    w.write_record(&header)?;
    for i in 0..raster.grid.len() {
        let (r, c) = raster.grid.row_col(i)?;
        let mut rec = vec![c.to_string(), r.to_string()];
        rec.extend(names.iter().map(|n| raster.layer(n).unwrap()[i].to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    write_meta(path, &RasterMeta::for_grid(&raster.grid))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> StemMapMeta {
        StemMapMeta::new(Rect::new(0.0, 0.0, 500.0, 700.0).unwrap())
    }

    #[test]
    fn three_rows() {
        let text = "x,y,agb\n1,2,3\n4,5,6\n7,8,9\n";
        let m = stemmap_from_reader(text.as_bytes(), &meta(), "t").unwrap();
        assert_eq!(m.len(), 3);
        assert_eq!(m.trees()[2].agb, 9.0);
    }

    #[test]
    fn out_of_region_names_row() {
        let text = "x,y,agb\n1,2,3\n-1,5,6\n";
        match stemmap_from_reader(text.as_bytes(), &meta(), "t") {
            Err(Error::Ingestion { row, message, .. }) => {
                assert_eq!(row, 3);
                assert!(message.contains("outside"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_column_and_bad_number() {
        let err = stemmap_from_reader("x,y\n1,2\n".as_bytes(), &meta(), "t").unwrap_err();
        assert!(err.to_string().contains("agb"), "{err}");
        match stemmap_from_reader("x,y,agb\n1,2,3\n1,abc,3\n".as_bytes(), &meta(), "t") {
            Err(Error::Ingestion { row: 3, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn semicolon_delimiter_and_units() {
        let mut m = meta();
        m.delimiter = ';';
        m.mass_unit = MassUnit::Megagram;
        let s = stemmap_from_reader("agb;x;y\n0.5;1;1\n".as_bytes(), &m, "t").unwrap();
        assert_eq!(s.trees()[0].agb, 500.0);
    }

    #[test]
    fn raster_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let grid = GridFrame::new(3, 2, 10.0, Point::new(5.0, 0.0)).unwrap();
        let mut layers = BTreeMap::new();
        layers.insert("P90".to_string(), vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.5]);
        layers.insert("NDVI".to_string(), vec![0.1; 6]);
        let r = CovariateRaster::new(grid, layers).unwrap();
        let p = dir.path().join("raster.csv");
        write_raster(&p, &r).unwrap();
        assert_eq!(load_raster(&p).unwrap(), r);
    }

    #[test]
    fn raster_missing_cell() {
        let m = RasterMeta {
            delimiter: ',',
            n_cols: 2,
            n_rows: 2,
            cell_side: 1.0,
            origin_x: 0.0,
            origin_y: 0.0,
        };
        let err = raster_from_reader("col,row,a\n0,0,1\n1,0,1\n0,1,1\n".as_bytes(), &m, "r").unwrap_err();
        assert!(err.to_string().contains("missing"), "{err}");
        let dup = raster_from_reader("col,row,a\n0,0,1\n0,0,1\n".as_bytes(), &m, "r").unwrap_err();
        assert!(dup.to_string().contains("twice"), "{dup}");
    }

    #[test]
    fn stemmap_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let m = StemMap::new(
            Rect::new(0.0, 0.0, 20.0, 30.0).unwrap(),
            vec![Tree { x: 1.25, y: 2.0, agb: 3.125 }, Tree { x: 19.0, y: 29.5, agb: 0.0 }],
        )
        .unwrap();
        let p = dir.path().join("stems.csv");
        write_stemmap(&p, &m).unwrap();
        assert!(dir.path().join("stems.meta.toml").exists());
        let back = load_stemmap(&p).unwrap();
        assert_eq!(back.trees(), m.trees());
        assert_eq!(back.region(), m.region());
    }
}
