//! Balanced panel container and CSV input/output.
//!
//! A [`Panel`] holds `a` groups observed over a shared time grid of `n`
//! points, each observation a `p`-dimensional real vector. Missing entries
//! are tracked in a boolean mask; every group shares the same grid, so a
//! panel is always rectangular. [`CompletePanel`] is the missing-free
//! refinement required by the test statistic.
//!
//! Two CSV layouts are supported:
//!
//! - `long`: header `area,time,value` (or `area,time,dim,value` for
//!   multivariate panels), one row per observed cell,
//! - `wide`: one column per area, one row per time point, univariate only.
//!
//! Group order is the order of first appearance in the data, never
//! alphabetical. Missing values are written as `NA` and read from `NA`,
//! `NaN` (either case-insensitively), or an empty cell.

use std::collections::HashMap;
use std::io;
use std::path::Path;

use crate::error::{Error, Result};

/// CSV layout selector for [`read_csv`] and [`write_csv`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// `area,time,value` rows, one per cell; carries time labels.
    Long,
    /// One column per area, one row per time; univariate, no time labels.
    Wide,
}

impl std::str::FromStr for Layout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "long" => Ok(Layout::Long),
            "wide" => Ok(Layout::Wide),
            other => Err(Error::InvalidInput(format!(
                "unknown layout `{other}` (expected `long` or `wide`)"
            ))),
        }
    }
}

/// Rectangular panel: `a` labeled groups x `n` time points x `p` coordinates,
/// with a missing-value mask. Values at missing positions are stored as NaN
/// so accidental use is loud.
#[derive(Debug, Clone)]
pub struct Panel {
    labels: Vec<String>,
    time_index: Option<Vec<String>>,
    num_times: usize,
    dim: usize,
    values: Vec<f64>,
    missing: Vec<bool>,
}

impl Panel {
    /// Builds a panel from flat row-major storage: index `(i, t, d)` maps to
    /// `(i * num_times + t) * dim + d`. Labels must be unique and non-empty;
    /// non-missing values must be finite.
    pub fn new(
        labels: Vec<String>,
        time_index: Option<Vec<String>>,
        num_times: usize,
        dim: usize,
        values: Vec<f64>,
        missing: Vec<bool>,
    ) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidInput("panel needs at least one group".into()));
        }
        if num_times == 0 {
            return Err(Error::InvalidInput("panel needs at least one time point".into()));
        }
        if dim == 0 {
            return Err(Error::InvalidInput("panel dimension must be at least 1".into()));
        }
        let mut seen = HashMap::new();
        for (i, l) in labels.iter().enumerate() {
            if l.is_empty() {
                return Err(Error::InvalidInput(format!("group {} has an empty label", i + 1)));
            }
            if seen.insert(l.clone(), i).is_some() {
                return Err(Error::InvalidInput(format!("duplicate group label `{l}`")));
            }
        }
        if let Some(idx) = &time_index {
            if idx.len() != num_times {
                return Err(Error::InvalidInput(format!(
                    "time index has {} labels but the panel has {} time points",
                    idx.len(),
                    num_times
                )));
            }
        }
        let total = labels.len() * num_times * dim;
        if values.len() != total || missing.len() != total {
            return Err(Error::InvalidInput(format!(
                "expected {total} values and mask entries, got {} and {}",
                values.len(),
                missing.len()
            )));
        }
        let mut values = values;
        for (k, v) in values.iter_mut().enumerate() {
            if missing[k] {
                *v = f64::NAN;
            } else if !v.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "non-finite value at flat index {k}"
                )));
            }
        }
        Ok(Panel { labels, time_index, num_times, dim, values, missing })
    }

    /// Convenience constructor for a complete univariate panel: one series
    /// per group, all of equal length.
    pub fn from_series(labels: Vec<String>, series: Vec<Vec<f64>>) -> Result<Self> {
        if labels.len() != series.len() {
            return Err(Error::InvalidInput(format!(
                "{} labels but {} series",
                labels.len(),
                series.len()
            )));
        }
        let n = series.first().map_or(0, |s| s.len());
        if series.iter().any(|s| s.len() != n) {
            return Err(Error::InvalidInput("series lengths differ across groups".into()));
        }
        let values: Vec<f64> = series.into_iter().flatten().collect();
        let missing = vec![false; values.len()];
        Panel::new(labels, None, n, 1, values, missing)
    }

    pub fn num_groups(&self) -> usize {
        self.labels.len()
    }

    pub fn num_times(&self) -> usize {
        self.num_times
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn time_index(&self) -> Option<&[String]> {
        self.time_index.as_deref()
    }

    #[inline]
    fn flat(&self, group: usize, time: usize, d: usize) -> usize {
        (group * self.num_times + time) * self.dim + d
    }

    /// Value at `(group, time, d)`; NaN when the cell is missing.
    pub fn value(&self, group: usize, time: usize, d: usize) -> f64 {
        self.values[self.flat(group, time, d)]
    }

    pub fn is_missing(&self, group: usize, time: usize, d: usize) -> bool {
        self.missing[self.flat(group, time, d)]
    }

    /// One group's series along a single coordinate, missing entries as None.
    pub fn series(&self, group: usize, d: usize) -> Vec<Option<f64>> {
        (0..self.num_times)
            .map(|t| {
                if self.is_missing(group, t, d) {
                    None
                } else {
                    Some(self.value(group, t, d))
                }
            })
            .collect()
    }

    /// Fraction of this group's cells (over all times and coordinates) that
    /// are missing.
    pub fn group_missing_fraction(&self, group: usize) -> f64 {
        let per_group = self.num_times * self.dim;
        let start = group * per_group;
        let miss = self.missing[start..start + per_group].iter().filter(|&&m| m).count();
        miss as f64 / per_group as f64
    }

    pub fn has_missing(&self) -> bool {
        self.missing.iter().any(|&m| m)
    }

    /// New panel containing the given groups, in the given order.
    pub fn select_groups(&self, indices: &[usize]) -> Result<Panel> {
        if indices.is_empty() {
            return Err(Error::InvalidInput("group selection is empty".into()));
        }
        let per_group = self.num_times * self.dim;
        let mut labels = Vec::with_capacity(indices.len());
        let mut values = Vec::with_capacity(indices.len() * per_group);
        let mut missing = Vec::with_capacity(indices.len() * per_group);
        for &i in indices {
            if i >= self.num_groups() {
                return Err(Error::InvalidInput(format!(
                    "group index {i} out of range for {} groups",
                    self.num_groups()
                )));
            }
            labels.push(self.labels[i].clone());
            let start = i * per_group;
            values.extend_from_slice(&self.values[start..start + per_group]);
            missing.extend_from_slice(&self.missing[start..start + per_group]);
        }
        Panel::new(labels, self.time_index.clone(), self.num_times, self.dim, values, missing)
    }

    /// Refines into a [`CompletePanel`], reporting the first missing cell if
    /// any remain.
    pub fn complete(&self) -> Result<CompletePanel> {
        for i in 0..self.num_groups() {
            for t in 0..self.num_times {
                for d in 0..self.dim {
                    if self.is_missing(i, t, d) {
                        return Err(Error::Inapplicable(format!(
                            "panel has missing values (first at group `{}`, time {}); \
                             impute or drop incomplete groups before testing",
                            self.labels[i],
                            self.time_index
                                .as_ref()
                                .map_or_else(|| (t + 1).to_string(), |idx| idx[t].clone()),
                        )));
                    }
                }
            }
        }
        Ok(CompletePanel(self.clone()))
    }
}

impl PartialEq for Panel {
    /// Structural equality; values compare bitwise on non-missing cells so
    /// that `-0.0` and `0.0` stay distinct and masked slots are ignored.
    fn eq(&self, other: &Self) -> bool {
        self.labels == other.labels
            && self.time_index == other.time_index
            && self.num_times == other.num_times
            && self.dim == other.dim
            && self.missing == other.missing
            && self
                .values
                .iter()
                .zip(&other.values)
                .zip(&self.missing)
                .all(|((x, y), &m)| m || x.to_bits() == y.to_bits())
    }
}

/// A panel with no missing entries; the only input the test accepts.
#[derive(Debug, Clone, PartialEq)]
pub struct CompletePanel(Panel);

impl CompletePanel {
    /// Complete univariate panel from one series per group.
    pub fn from_series(labels: Vec<String>, series: Vec<Vec<f64>>) -> Result<Self> {
        Ok(CompletePanel(Panel::from_series(labels, series)?))
    }

    /// Complete multivariate panel from flat row-major values.
    pub fn from_values(
        labels: Vec<String>,
        num_times: usize,
        dim: usize,
        values: Vec<f64>,
    ) -> Result<Self> {
        let missing = vec![false; values.len()];
        Ok(CompletePanel(Panel::new(labels, None, num_times, dim, values, missing)?))
    }

    pub fn as_panel(&self) -> &Panel {
        &self.0
    }

    pub fn into_panel(self) -> Panel {
        self.0
    }

    /// Group selection preserves completeness.
    pub fn select_groups(&self, indices: &[usize]) -> Result<CompletePanel> {
        Ok(CompletePanel(self.0.select_groups(indices)?))
    }
}

impl TryFrom<Panel> for CompletePanel {
    type Error = Error;

    fn try_from(panel: Panel) -> Result<Self> {
        panel.complete()
    }
}

impl std::ops::Deref for CompletePanel {
    type Target = Panel;

    fn deref(&self) -> &Panel {
        &self.0
    }
}

/// Parses a missing-aware value token: empty and `NA` (exact) are missing.
fn parse_value(token: &str, line: usize) -> Result<Option<f64>> {
    let t = token.trim();
    if t.is_empty() || t.eq_ignore_ascii_case("na") || t.eq_ignore_ascii_case("nan") {
        return Ok(None);
    }
    t.parse::<f64>().map(Some).map_err(|_| Error::Csv {
        line,
        message: format!("non-numeric value `{t}`"),
    })
}

/// Reads a panel from a CSV file. See the module docs for the two layouts.
pub fn read_csv<P: AsRef<Path>>(path: P, layout: Layout) -> Result<Panel> {
    let file = std::fs::File::open(path)?;
    read_csv_reader(file, layout)
}

/// Reads a panel from any CSV byte stream.
pub fn read_csv_reader<R: io::Read>(reader: R, layout: Layout) -> Result<Panel> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    match layout {
        Layout::Long => read_long(&mut rdr),
        Layout::Wide => read_wide(&mut rdr),
    }
}

fn csv_line(err: &csv::Error) -> usize {
    match err.position() {
        Some(pos) => pos.line() as usize,
        None => 0,
    }
}

fn read_long<R: io::Read>(rdr: &mut csv::Reader<R>) -> Result<Panel> {
    let headers = rdr
        .headers()
        .map_err(|e| Error::Csv { line: 1, message: e.to_string() })?
        .clone();
    let cols: Vec<String> = headers.iter().map(|h| h.trim().to_string()).collect();
    let has_dim = match cols.as_slice() {
        [a, t, v] if a == "area" && t == "time" && v == "value" => false,
        [a, t, d, v] if a == "area" && t == "time" && d == "dim" && v == "value" => true,
        _ => {
            return Err(Error::Csv {
                line: 1,
                message: format!(
                    "expected header `area,time,value` or `area,time,dim,value`, got `{}`",
                    cols.join(",")
                ),
            })
        }
    };

    // First-appearance orderings for groups, times, and coordinates.
    let mut group_ids: HashMap<String, usize> = HashMap::new();
    let mut groups: Vec<String> = Vec::new();
    let mut time_ids: HashMap<String, usize> = HashMap::new();
    let mut times: Vec<String> = Vec::new();
    let mut dim_ids: HashMap<String, usize> = HashMap::new();
    let mut dims: Vec<String> = Vec::new();
    // (group, time, dim) -> (value, source line)
    let mut cells: HashMap<(usize, usize, usize), (Option<f64>, usize)> = HashMap::new();

    for record in rdr.records() {
        let record = record.map_err(|e| Error::Csv {
            line: csv_line(&e),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let area = record[0].trim().to_string();
        if area.is_empty() {
            return Err(Error::Csv { line, message: "empty area label".into() });
        }
        let time = record[1].trim().to_string();
        if time.is_empty() {
            return Err(Error::Csv { line, message: "empty time label".into() });
        }
        let (dim_token, value_token) = if has_dim {
            (record[2].trim().to_string(), &record[3])
        } else {
            ("1".to_string(), &record[2])
        };
        if dim_token.is_empty() {
            return Err(Error::Csv { line, message: "empty dim label".into() });
        }
        let value = parse_value(value_token, line)?;

        let gi = *group_ids.entry(area.clone()).or_insert_with(|| {
            groups.push(area);
            groups.len() - 1
        });
        let ti = *time_ids.entry(time.clone()).or_insert_with(|| {
            times.push(time);
            times.len() - 1
        });
        let di = *dim_ids.entry(dim_token.clone()).or_insert_with(|| {
            dims.push(dim_token);
            dims.len() - 1
        });
        if let Some((_, prev_line)) = cells.insert((gi, ti, di), (value, line)) {
            return Err(Error::Csv {
                line,
                message: format!(
                    "duplicate cell for area `{}`, time `{}` (first seen at line {prev_line})",
                    groups[gi], times[ti]
                ),
            });
        }
    }

    if groups.len() < 2 {
        return Err(Error::Inapplicable(format!(
            "panel has {} area(s); at least 2 are required",
            groups.len()
        )));
    }
    if times.is_empty() {
        return Err(Error::Inapplicable("panel has no time points".into()));
    }

    let (a, n, p) = (groups.len(), times.len(), dims.len());
    let mut values = vec![f64::NAN; a * n * p];
    let mut missing = vec![true; a * n * p];
    for ((gi, ti, di), (value, _)) in cells {
        let k = (gi * n + ti) * p + di;
        if let Some(v) = value {
            values[k] = v;
            missing[k] = false;
        }
    }
    Panel::new(groups, Some(times), n, p, values, missing)
}

fn read_wide<R: io::Read>(rdr: &mut csv::Reader<R>) -> Result<Panel> {
    let headers = rdr
        .headers()
        .map_err(|e| Error::Csv { line: 1, message: e.to_string() })?
        .clone();
    let labels: Vec<String> = headers.iter().map(|h| h.trim().to_string()).collect();
    if labels.len() < 2 {
        return Err(Error::Inapplicable(format!(
            "panel has {} area(s); at least 2 are required",
            labels.len()
        )));
    }
    if labels.iter().any(|l| l.is_empty()) {
        return Err(Error::Csv { line: 1, message: "empty area label in header".into() });
    }

    // columns[i][t]
    let mut columns: Vec<Vec<Option<f64>>> = vec![Vec::new(); labels.len()];
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Csv {
            line: csv_line(&e),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        for (i, token) in record.iter().enumerate() {
            columns[i].push(parse_value(token, line)?);
        }
    }
    let n = columns[0].len();
    if n == 0 {
        return Err(Error::Inapplicable("panel has no time points".into()));
    }

    let a = labels.len();
    let mut values = vec![f64::NAN; a * n];
    let mut missing = vec![true; a * n];
    for (i, col) in columns.iter().enumerate() {
        for (t, cell) in col.iter().enumerate() {
            if let Some(v) = cell {
                values[i * n + t] = *v;
                missing[i * n + t] = false;
            }
        }
    }
    Panel::new(labels, None, n, 1, values, missing)
}

/// Writes a panel as CSV. Long layout keeps time labels (synthesizing
/// `1..=n` when the panel has none); wide layout is univariate and drops
/// them. Missing cells are written as `NA`. Finite values are printed in
/// shortest round-trip form, so a write/read cycle reproduces the panel
/// bit-for-bit.
pub fn write_csv<P: AsRef<Path>>(panel: &Panel, path: P, layout: Layout) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv_writer(panel, file, layout)
}

/// Writes a panel as CSV to any byte sink.
pub fn write_csv_writer<W: io::Write>(panel: &Panel, writer: W, layout: Layout) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let to_io = |e: csv::Error| Error::Io(io::Error::other(e));
    match layout {
        Layout::Long => {
            let times: Vec<String> = match panel.time_index() {
                Some(idx) => idx.to_vec(),
                None => (1..=panel.num_times()).map(|t| t.to_string()).collect(),
            };
            let has_dim = panel.dim() > 1;
            if has_dim {
                wtr.write_record(["area", "time", "dim", "value"]).map_err(to_io)?;
            } else {
                wtr.write_record(["area", "time", "value"]).map_err(to_io)?;
            }
            for i in 0..panel.num_groups() {
                for t in 0..panel.num_times() {
                    for d in 0..panel.dim() {
                        let value = if panel.is_missing(i, t, d) {
                            "NA".to_string()
                        } else {
                            format!("{}", panel.value(i, t, d))
                        };
                        if has_dim {
                            wtr.write_record([
                                panel.labels()[i].as_str(),
                                times[t].as_str(),
                                &(d + 1).to_string(),
                                &value,
                            ])
                            .map_err(to_io)?;
                        } else {
                            wtr.write_record([
                                panel.labels()[i].as_str(),
                                times[t].as_str(),
                                &value,
                            ])
                            .map_err(to_io)?;
                        }
                    }
                }
            }
        }
        Layout::Wide => {
            if panel.dim() != 1 {
                return Err(Error::InvalidInput(
                    "wide layout supports univariate panels only".into(),
                ));
            }
            wtr.write_record(panel.labels()).map_err(to_io)?;
            for t in 0..panel.num_times() {
                let row: Vec<String> = (0..panel.num_groups())
                    .map(|i| {
                        if panel.is_missing(i, t, 0) {
                            "NA".to_string()
                        } else {
                            format!("{}", panel.value(i, t, 0))
                        }
                    })
                    .collect();
                wtr.write_record(&row).map_err(to_io)?;
            }
        }
    }
    wtr.flush()?;
    Ok(())
}

/// Keeps the groups whose missing fraction is at most
/// `max_missing_fraction`, preserving order. Errors if fewer than two groups
/// survive.
pub fn drop_incomplete_groups(panel: &Panel, max_missing_fraction: f64) -> Result<Panel> {
    if !(0.0..=1.0).contains(&max_missing_fraction) {
        return Err(Error::InvalidInput(format!(
            "max missing fraction must lie in [0, 1], got {max_missing_fraction}"
        )));
    }
    let keep: Vec<usize> = (0..panel.num_groups())
        .filter(|&i| panel.group_missing_fraction(i) <= max_missing_fraction)
        .collect();
    if keep.len() < 2 {
        return Err(Error::Inapplicable(format!(
            "only {} group(s) fall at or below missing fraction {max_missing_fraction}; \
             at least 2 are required",
            keep.len()
        )));
    }
    panel.select_groups(&keep)
}

/// Restricts the panel to the time window `[from, to]` given by labels in
/// the panel's time index (inclusive on both ends).
pub fn restrict_time(panel: &Panel, from: &str, to: &str) -> Result<Panel> {
    let index = panel.time_index().ok_or_else(|| {
        Error::InvalidInput("panel has no time labels; cannot restrict by label".into())
    })?;
    let pos = |label: &str| {
        index.iter().position(|l| l == label).ok_or_else(|| {
            Error::InvalidInput(format!("time label `{label}` not found in the panel"))
        })
    };
    let lo = pos(from)?;
    let hi = pos(to)?;
    if lo > hi {
        return Err(Error::InvalidInput(format!(
            "`from` label `{from}` comes after `to` label `{to}`"
        )));
    }

    let (a, p) = (panel.num_groups(), panel.dim());
    let m = hi - lo + 1;
    let mut values = Vec::with_capacity(a * m * p);
    let mut missing = Vec::with_capacity(a * m * p);
    for i in 0..a {
        for t in lo..=hi {
            for d in 0..p {
                values.push(panel.value(i, t, d));
                missing.push(panel.is_missing(i, t, d));
            }
        }
    }
    Panel::new(
        panel.labels().to_vec(),
        Some(index[lo..=hi].to_vec()),
        m,
        p,
        values,
        missing,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn long_read_basic() {
        let csv = "area,time,value\n\
                   north,2009,1.5\n\
                   north,2010,2.5\n\
                   south,2009,3.0\n\
                   south,2010,NA\n";
        let p = read_csv_reader(csv.as_bytes(), Layout::Long).unwrap();
        assert_eq!(p.num_groups(), 2);
        assert_eq!(p.num_times(), 2);
        assert_eq!(p.dim(), 1);
        assert_eq!(p.labels(), &labels(&["north", "south"]));
        assert_eq!(p.time_index().unwrap(), &labels(&["2009", "2010"]));
        assert_eq!(p.value(0, 0, 0), 1.5);
        assert!(p.is_missing(1, 1, 0));
    }

    #[test]
    fn long_read_group_order_is_appearance_order() {
        let csv = "area,time,value\nzeta,1,1\nalpha,1,2\n";
        let p = read_csv_reader(csv.as_bytes(), Layout::Long).unwrap();
        assert_eq!(p.labels(), &labels(&["zeta", "alpha"]));
    }

    #[test]
    fn long_read_absent_pairs_are_missing_and_empty_is_missing() {
        let csv = "area,time,value\nx,1,1.0\nx,2,\ny,1,3.0\n";
        let p = read_csv_reader(csv.as_bytes(), Layout::Long).unwrap();
        assert!(p.is_missing(0, 1, 0)); // empty cell
        assert!(p.is_missing(1, 1, 0)); // absent pair (y, 2)
    }

    #[test]
    fn read_accepts_na_and_nan_spellings_as_missing() {
        let csv = "area,time,value\nx,1,NA\nx,2,NaN\nx,3,nan\ny,1,1\ny,2,2\ny,3,3\n";
        let p = read_csv_reader(csv.as_bytes(), Layout::Long).unwrap();
        assert!((0..3).all(|t| p.is_missing(0, t, 0)));
        assert!((0..3).all(|t| !p.is_missing(1, t, 0)));
    }

    #[test]
    fn long_read_rejects_duplicate_cell_with_line() {
        let csv = "area,time,value\nx,1,1.0\ny,1,2.0\nx,1,9.9\n";
        let err = read_csv_reader(csv.as_bytes(), Layout::Long).unwrap_err();
        match err {
            Error::Csv { line, message } => {
                assert_eq!(line, 4);
                assert!(message.contains("duplicate"), "message: {message}");
            }
            other => panic!("expected Csv error, got {other:?}"),
        }
    }

    #[test]
    fn long_read_rejects_non_numeric_with_line() {
        let csv = "area,time,value\nx,1,1.0\ny,1,oops\n";
        let err = read_csv_reader(csv.as_bytes(), Layout::Long).unwrap_err();
        match err {
            Error::Csv { line, message } => {
                assert_eq!(line, 3);
                assert!(message.contains("oops"));
            }
            other => panic!("expected Csv error, got {other:?}"),
        }
    }

    #[test]
    fn long_read_rejects_single_area() {
        let csv = "area,time,value\nx,1,1.0\nx,2,2.0\n";
        let err = read_csv_reader(csv.as_bytes(), Layout::Long).unwrap_err();
        assert!(matches!(err, Error::Inapplicable(_)));
    }

    #[test]
    fn long_read_multivariate() {
        let csv = "area,time,dim,value\n\
                   x,1,1,1.0\nx,1,2,2.0\nx,2,1,3.0\nx,2,2,4.0\n\
                   y,1,1,5.0\ny,1,2,6.0\ny,2,1,7.0\ny,2,2,8.0\n";
        let p = read_csv_reader(csv.as_bytes(), Layout::Long).unwrap();
        assert_eq!(p.dim(), 2);
        assert_eq!(p.value(1, 0, 1), 6.0);
    }

    #[test]
    fn wide_read_counts_columns_as_areas() {
        let csv = "x,y\n1,2\n3,4\n5,6\n7,NA\n";
        let p = read_csv_reader(csv.as_bytes(), Layout::Wide).unwrap();
        assert_eq!(p.num_groups(), 2);
        assert_eq!(p.num_times(), 4);
        assert_eq!(p.dim(), 1);
        assert!(p.time_index().is_none());
        assert!(p.is_missing(1, 3, 0));
        assert_eq!(p.value(0, 2, 0), 5.0);
    }

    #[test]
    fn roundtrip_long_is_bit_exact() {
        let mut values = vec![0.1, -0.0, 1e-300, 2.5, f64::NAN, 3.0 + 1e-15];
        let missing = vec![false, false, false, false, true, false];
        values[4] = f64::NAN;
        let p = Panel::new(
            labels(&["a", "b"]),
            Some(labels(&["t1", "t2", "t3"])),
            3,
            1,
            values,
            missing,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_csv_writer(&p, &mut buf, Layout::Long).unwrap();
        let q = read_csv_reader(buf.as_slice(), Layout::Long).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn roundtrip_wide_is_bit_exact() {
        let p = Panel::from_series(
            labels(&["a", "b"]),
            vec![vec![1.0 / 3.0, -2.75, 9.9e99], vec![0.0, -0.0, 4.25]],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_csv_writer(&p, &mut buf, Layout::Wide).unwrap();
        let q = read_csv_reader(buf.as_slice(), Layout::Wide).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn write_long_synthesizes_time_labels() {
        let p = Panel::from_series(labels(&["a", "b"]), vec![vec![1.0, 2.0], vec![3.0, 4.0]])
            .unwrap();
        let mut buf = Vec::new();
        write_csv_writer(&p, &mut buf, Layout::Long).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("a,1,1\n"));
        assert!(text.contains("b,2,4\n"));
    }

    #[test]
    fn wide_write_rejects_multivariate() {
        let p = Panel::new(
            labels(&["a", "b"]),
            None,
            1,
            2,
            vec![1.0, 2.0, 3.0, 4.0],
            vec![false; 4],
        )
        .unwrap();
        let mut buf = Vec::new();
        assert!(write_csv_writer(&p, &mut buf, Layout::Wide).is_err());
    }

    #[test]
    fn drop_incomplete_groups_filters_by_fraction() {
        // missing fractions 0, 0.4, 0.05 over 20 cells
        let mut missing = vec![false; 60];
        for t in 0..8 {
            missing[20 + t] = true;
        }
        missing[40] = true;
        let values: Vec<f64> = (0..60).map(|k| k as f64).collect();
        let p = Panel::new(labels(&["a", "b", "c"]), None, 20, 1, values, missing).unwrap();
        let q = drop_incomplete_groups(&p, 0.3).unwrap();
        assert_eq!(q.labels(), &labels(&["a", "c"]));

        // threshold 1.0 keeps everything
        let all = drop_incomplete_groups(&p, 1.0).unwrap();
        assert_eq!(all.num_groups(), 3);

        // a threshold below every fraction leaves too few groups
        let err = drop_incomplete_groups(&p, 0.0).unwrap_err();
        assert!(matches!(err, Error::Inapplicable(_)));
    }

    #[test]
    fn restrict_time_by_labels() {
        let years: Vec<String> = (2009..=2023).map(|y| y.to_string()).collect();
        let n = years.len();
        let series: Vec<Vec<f64>> =
            (0..2).map(|i| (0..n).map(|t| (i * n + t) as f64).collect()).collect();
        let p = Panel::new(
            labels(&["a", "b"]),
            Some(years),
            n,
            1,
            series.into_iter().flatten().collect(),
            vec![false; 2 * n],
        )
        .unwrap();

        let q = restrict_time(&p, "2012", "2023").unwrap();
        assert_eq!(q.num_times(), 12);
        assert_eq!(q.time_index().unwrap()[0], "2012");
        assert_eq!(q.value(0, 0, 0), 3.0);

        assert!(restrict_time(&p, "1999", "2023").is_err());
        assert!(restrict_time(&p, "2023", "2012").is_err());

        // restricting to the full range is the identity
        let full = restrict_time(&p, "2009", "2023").unwrap();
        assert_eq!(full, p);
    }

    #[test]
    fn restrict_time_composes() {
        let idx: Vec<String> = (1..=10).map(|t| format!("t{t}")).collect();
        let values: Vec<f64> = (0..20).map(|k| k as f64 * 0.5).collect();
        let p = Panel::new(labels(&["a", "b"]), Some(idx), 10, 1, values, vec![false; 20])
            .unwrap();
        let once = restrict_time(&p, "t2", "t9").unwrap();
        let twice = restrict_time(&once, "t4", "t7").unwrap();
        let direct = restrict_time(&p, "t4", "t7").unwrap();
        assert_eq!(twice, direct);
    }

    #[test]
    fn complete_reports_first_missing_cell() {
        let p = Panel::new(
            labels(&["a", "b"]),
            Some(labels(&["t1", "t2"])),
            2,
            1,
            vec![1.0, f64::NAN, 3.0, 4.0],
            vec![false, true, false, false],
        )
        .unwrap();
        let err = p.complete().unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("`a`") && msg.contains("t2"), "message: {msg}");

        let q = Panel::from_series(labels(&["a", "b"]), vec![vec![1.0], vec![2.0]]).unwrap();
        assert!(q.complete().is_ok());
    }

    #[test]
    fn select_groups_preserves_order_and_data() {
        let p = Panel::from_series(
            labels(&["a", "b", "c"]),
            vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]],
        )
        .unwrap();
        let q = p.select_groups(&[2, 0]).unwrap();
        assert_eq!(q.labels(), &labels(&["c", "a"]));
        assert_eq!(q.value(0, 1, 0), 6.0);
        assert!(p.select_groups(&[]).is_err());
        assert!(p.select_groups(&[3]).is_err());
    }
}
