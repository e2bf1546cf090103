//! Balanced country x year panels with masked cells, CSV ingestion, lags,
//! within-group demeaning and aligned estimation frames.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// One variable over the whole panel, entity-major (`index = i * T + t`).
/// `None` marks an unobserved cell.
pub type Series = Vec<Option<f64>>;

#[derive(Debug, Clone, PartialEq)]
pub struct PanelDataset {
    entities: Vec<String>,
    periods: Vec<i32>,
    series: BTreeMap<String, Series>,
}

impl PanelDataset {
    pub fn new(
        entities: Vec<String>,
        periods: Vec<i32>,
        series: BTreeMap<String, Series>,
    ) -> Result<Self> {
        let unique: BTreeSet<&String> = entities.iter().collect();
        if unique.len() != entities.len() {
            return Err(Error::invalid("cross-section identifiers must be unique"));
        }
        if periods.windows(2).any(|w| w[1] != w[0] + 1) {
            return Err(Error::invalid("periods must be strictly increasing with unit step"));
        }
        let cells = entities.len() * periods.len();
        for (name, s) in &series {
            if s.len() != cells {
                return Err(Error::invalid(format!(
                    "series `{name}` has {} cells, expected {cells}",
                    s.len()
                )));
            }
            if s.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("series `{name}` has non-finite values")));
            }
        }
        Ok(PanelDataset {
            entities,
            periods,
            series,
        })
    }

    pub fn entities(&self) -> &[String] {
        &self.entities
    }

    pub fn periods(&self) -> &[i32] {
        &self.periods
    }

    pub fn n_entities(&self) -> usize {
        self.entities.len()
    }

    pub fn n_periods(&self) -> usize {
        self.periods.len()
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.series.keys().map(String::as_str)
    }

    pub fn has_variable(&self, name: &str) -> bool {
        self.series.contains_key(name)
    }

    pub fn series(&self, name: &str) -> Result<&Series> {
        self.series
            .get(name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    /// Cells of one entity for one variable, in period order.
    pub fn entity_values(&self, name: &str, entity: usize) -> Result<&[Option<f64>]> {
        let t = self.n_periods();
        Ok(&self.series(name)?[entity * t..(entity + 1) * t])
    }

    pub fn value(&self, name: &str, entity: usize, period: usize) -> Result<Option<f64>> {
        Ok(self.series(name)?[entity * self.n_periods() + period])
    }

    pub fn entity_index(&self, id: &str) -> Option<usize> {
        self.entities.iter().position(|e| e == id)
    }

    /// Returns a new panel with `name` added (or replaced).
    pub fn with_series(&self, name: &str, values: Series) -> Result<Self> {
        let mut series = self.series.clone();
        series.insert(name.to_string(), values);
        PanelDataset::new(self.entities.clone(), self.periods.clone(), series)
    }

    /// Series shifted `k` periods back within each entity; the first `k`
    /// periods of every entity are masked.
    pub fn lagged(&self, name: &str, k: usize) -> Result<Series> {
        let src = self.series(name)?;
        let t = self.n_periods();
        if k == 0 {
            return Err(Error::invalid("lag order must be at least 1"));
        }
        if k >= t {
            return Err(Error::invalid(format!(
                "lag {k} of `{name}` leaves no observations in a panel with {t} periods"
            )));
        }
        let mut out = vec![None; src.len()];
        for i in 0..self.n_entities() {
            for p in k..t {
                out[i * t + p] = src[i * t + p - k];
            }
        }
        Ok(out)
    }

    /// Adds the lagged series under the conventional `name(-k)` label.
    pub fn with_lag(&self, name: &str, k: usize) -> Result<Self> {
        let values = self.lagged(name, k)?;
        self.with_series(&lag_label(name, k), values)
    }

    /// First difference within each entity; the first period is masked.
    pub fn differenced(&self, name: &str) -> Result<Series> {
        let src = self.series(name)?;
        let t = self.n_periods();
        let mut out = vec![None; src.len()];
        for i in 0..self.n_entities() {
            for p in 1..t {
                if let (Some(a), Some(b)) = (src[i * t + p], src[i * t + p - 1]) {
                    out[i * t + p] = Some(a - b);
                }
            }
        }
        Ok(out)
    }

    /// Panel restricted to the listed entities (kept in the given order).
    pub fn subset(&self, entities: &[String]) -> Result<Self> {
        let idx: Vec<usize> = entities
            .iter()
            .map(|e| {
                self.entity_index(e)
                    .ok_or_else(|| Error::invalid(format!("entity `{e}` not in panel")))
            })
            .collect::<Result<_>>()?;
        let t = self.n_periods();
        let series = self
            .series
            .iter()
            .map(|(name, s)| {
                let mut v = Vec::with_capacity(idx.len() * t);
                for &i in &idx {
                    v.extend_from_slice(&s[i * t..(i + 1) * t]);
                }
                (name.clone(), v)
            })
            .collect();
        PanelDataset::new(entities.to_vec(), self.periods.clone(), series)
    }

    /// Observed values of one variable arranged as one vector per entity,
    /// dropping masked cells. Errors if entities end up with different
    /// lengths, since every panel test here needs a balanced slice.
    pub fn balanced_slice(&self, name: &str) -> Result<Vec<Vec<f64>>> {
        let out: Vec<Vec<f64>> = (0..self.n_entities())
            .map(|i| Ok(self.entity_values(name, i)?.iter().flatten().copied().collect()))
            .collect::<Result<_>>()?;
        if let Some(first) = out.first() {
            if let Some((i, _)) = out.iter().enumerate().find(|(_, v)| v.len() != first.len()) {
                return Err(Error::Unbalanced(format!(
                    "`{name}` has {} observations for {} but {} for {}",
                    out[i].len(),
                    self.entities[i],
                    first.len(),
                    self.entities[0]
                )));
            }
        }
        Ok(out)
    }
}

pub fn lag_label(name: &str, k: usize) -> String {
    if k == 0 {
        name.to_string()
    } else {
        format!("{name}(-{k})")
    }
}

/// Column names of a long-format panel file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LongCsvSchema {
    pub entity: String,
    pub year: String,
    pub variable: String,
    pub value: String,
}

impl Default for LongCsvSchema {
    fn default() -> Self {
        LongCsvSchema {
            entity: "entity".into(),
            year: "year".into(),
            variable: "variable".into(),
            value: "value".into(),
        }
    }
}

fn column(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::MissingColumn(name.to_string()))
}

struct Observation {
    entity: String,
    year: i32,
    variable: String,
    value: f64,
}

fn assemble(obs: Vec<Observation>, variables_hint: &[String]) -> Result<PanelDataset> {
    let mut seen = BTreeSet::new();
    for o in &obs {
        if !seen.insert((o.entity.as_str(), o.year, o.variable.as_str())) {
            return Err(Error::DuplicateObservation {
                entity: o.entity.clone(),
                year: o.year,
                variable: o.variable.clone(),
            });
        }
    }
    let entities: Vec<String> = obs
        .iter()
        .map(|o| o.entity.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if entities.is_empty() {
        return Err(Error::InsufficientData("no observations".into()));
    }
    let lo = obs.iter().map(|o| o.year).min().unwrap_or(0);
    let hi = obs.iter().map(|o| o.year).max().unwrap_or(0);
    let periods: Vec<i32> = (lo..=hi).collect();
    if periods.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "need at least 3 periods, found {}",
            periods.len()
        )));
    }
    let t = periods.len();
    let mut series: BTreeMap<String, Series> = variables_hint
        .iter()
        .map(|v| (v.clone(), vec![None; entities.len() * t]))
        .collect();
    for o in obs {
        let i = entities.binary_search(&o.entity).expect("entity collected above");
        let p = (o.year - lo) as usize;
        series
            .entry(o.variable)
            .or_insert_with(|| vec![None; entities.len() * t])[i * t + p] = Some(o.value);
    }
    PanelDataset::new(entities, periods, series)
}

fn parse_year(s: &str, row: usize) -> Result<i32> {
    s.trim().parse::<i32>().map_err(|_| Error::Parse {
        row,
        message: format!("year `{s}` is not an integer"),
    })
}

fn parse_value(s: &str, row: usize) -> Result<f64> {
    match s.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Parse {
            row,
            message: format!("value `{s}` is not a finite number"),
        }),
    }
}

/// Reads a long-format panel: one row per (entity, year, variable, value).
/// Entities are sorted lexicographically and the period axis spans the
/// observed years without gaps; cells without a row are masked.
pub fn read_long_csv<R: Read>(reader: R, schema: &LongCsvSchema) -> Result<PanelDataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let (ce, cy, cv, cx) = (
        column(&headers, &schema.entity)?,
        column(&headers, &schema.year)?,
        column(&headers, &schema.variable)?,
        column(&headers, &schema.value)?,
    );
    let mut obs = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let row = rec.position().map_or(0, |p| p.line() as usize);
        let field = |c: usize| rec.get(c).unwrap_or("");
        obs.push(Observation {
            entity: field(ce).to_string(),
            year: parse_year(field(cy), row)?,
            variable: field(cv).to_string(),
            value: parse_value(field(cx), row)?,
        });
    }
    assemble(obs, &[])
}

pub fn load_long_csv(path: impl AsRef<Path>, schema: &LongCsvSchema) -> Result<PanelDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_long_csv(file, schema)
}

/// Reads `entity,year,<var1>,<var2>,...`; an empty cell is masked.
pub fn read_wide_csv<R: Read>(reader: R) -> Result<PanelDataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let ce = column(&headers, "entity")?;
    let cy = column(&headers, "year")?;
    let vars: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .filter(|(c, _)| *c != ce && *c != cy)
        .map(|(c, h)| (c, h.trim().to_string()))
        .collect();
    let mut obs = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let row = rec.position().map_or(0, |p| p.line() as usize);
        let entity = rec.get(ce).unwrap_or("").to_string();
        let year = parse_year(rec.get(cy).unwrap_or(""), row)?;
        for (c, name) in &vars {
            let raw = rec.get(*c).unwrap_or("");
            if raw.trim().is_empty() {
                continue;
            }
            obs.push(Observation {
                entity: entity.clone(),
                year,
                variable: name.clone(),
                value: parse_value(raw, row)?,
            });
        }
    }
    let names: Vec<String> = vars.into_iter().map(|(_, n)| n).collect();
    assemble(obs, &names)
}

pub fn load_wide_csv(path: impl AsRef<Path>) -> Result<PanelDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_wide_csv(file)
}

/// Writes every observed cell as `entity,year,variable,value`, variable-major
/// then entity, then year. Values use the shortest round-trip representation.
pub fn write_long_csv<W: Write>(panel: &PanelDataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["entity", "year", "variable", "value"])?;
    for name in panel.variables() {
        for (i, e) in panel.entities().iter().enumerate() {
            for (p, y) in panel.periods().iter().enumerate() {
                if let Some(v) = panel.value(name, i, p)? {
                    w.write_record([e.as_str(), &y.to_string(), name, &v.to_string()])?;
                }
            }
        }
    }
    w.flush().map_err(|e| Error::io("<writer>", e))?;
    Ok(())
}

/// Result of [`within_demean`]: transformed series plus the per-entity means
/// that were removed.
#[derive(Debug, Clone, PartialEq)]
pub struct Demeaned {
    pub series: BTreeMap<String, Series>,
    pub group_means: BTreeMap<String, Vec<f64>>,
}

/// Subtracts each entity's mean over its unmasked cells.
pub fn within_demean(panel: &PanelDataset, vars: &[&str]) -> Result<Demeaned> {
    let t = panel.n_periods();
    let mut series = BTreeMap::new();
    let mut group_means = BTreeMap::new();
    for &name in vars {
        let src = panel.series(name)?;
        let mut out = vec![None; src.len()];
        let mut means = Vec::with_capacity(panel.n_entities());
        for (i, entity) in panel.entities().iter().enumerate() {
            let cells = &src[i * t..(i + 1) * t];
            let obs: Vec<f64> = cells.iter().flatten().copied().collect();
            if obs.len() < 2 {
                return Err(Error::CrossSection {
                    entity: entity.clone(),
                    message: format!("`{name}` has {} unmasked values, need 2", obs.len()),
                });
            }
            let mean = obs.iter().sum::<f64>() / obs.len() as f64;
            for (p, c) in cells.iter().enumerate() {
                out[i * t + p] = c.map(|v| v - mean);
            }
            means.push(mean);
        }
        series.insert(name.to_string(), out);
        group_means.insert(name.to_string(), means);
    }
    Ok(Demeaned {
        series,
        group_means,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Dependent,
    Regressor,
}

/// A variable entering a regression, possibly lagged.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableSpec {
    pub name: String,
    pub lag: usize,
    pub role: Role,
}

impl VariableSpec {
    pub fn dependent(name: &str) -> Self {
        VariableSpec {
            name: name.into(),
            lag: 0,
            role: Role::Dependent,
        }
    }

    pub fn regressor(name: &str, lag: usize) -> Self {
        VariableSpec {
            name: name.into(),
            lag,
            role: Role::Regressor,
        }
    }

    /// Parses `name` or `name(-k)`.
    pub fn parse(text: &str, role: Role) -> Result<Self> {
        let text = text.trim();
        if let Some(open) = text.find("(-") {
            let close = text
                .strip_suffix(')')
                .ok_or_else(|| Error::invalid(format!("bad variable `{text}`")))?;
            let lag: usize = close[open + 2..]
                .parse()
                .map_err(|_| Error::invalid(format!("bad lag in `{text}`")))?;
            Ok(VariableSpec {
                name: text[..open].to_string(),
                lag,
                role,
            })
        } else if text.is_empty() {
            Err(Error::invalid("empty variable name"))
        } else {
            Ok(VariableSpec {
                name: text.to_string(),
                lag: 0,
                role,
            })
        }
    }

    pub fn label(&self) -> String {
        lag_label(&self.name, self.lag)
    }
}

impl fmt::Display for VariableSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowIndex {
    pub entity: usize,
    pub period: usize,
}

/// Rows where the dependent variable and every regressor are observed,
/// entity-major and year-ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationFrame {
    pub dependent: String,
    pub regressors: Vec<String>,
    pub y: Vec<f64>,
    pub x: Matrix,
    pub rows: Vec<RowIndex>,
    pub entities: Vec<String>,
    pub periods: Vec<i32>,
    /// Rows contributed by each entity, aligned with `entities`.
    pub entity_counts: Vec<usize>,
}

pub fn estimation_frame(panel: &PanelDataset, spec: &[VariableSpec]) -> Result<EstimationFrame> {
    let dep = spec
        .iter()
        .find(|v| v.role == Role::Dependent)
        .ok_or_else(|| Error::invalid("no dependent variable in specification"))?;
    let regs: Vec<&VariableSpec> = spec.iter().filter(|v| v.role == Role::Regressor).collect();
    let t = panel.n_periods();
    let mut columns: Vec<Series> = Vec::with_capacity(regs.len() + 1);
    for v in std::iter::once(dep).chain(regs.iter().copied()) {
        if !panel.has_variable(&v.name) {
            return Err(Error::UnknownVariable(v.name.clone()));
        }
        if v.lag + 2 > t {
            return Err(Error::invalid(format!(
                "lag {} of `{}` leaves fewer than two usable periods",
                v.lag, v.name
            )));
        }
        columns.push(if v.lag == 0 {
            panel.series(&v.name)?.clone()
        } else {
            panel.lagged(&v.name, v.lag)?
        });
    }
    let mut y = Vec::new();
    let mut data = Vec::new();
    let mut rows = Vec::new();
    let mut counts = vec![0; panel.n_entities()];
    for i in 0..panel.n_entities() {
        for p in 0..t {
            let cell = i * t + p;
            let vals: Option<Vec<f64>> = columns.iter().map(|c| c[cell]).collect();
            if let Some(vals) = vals {
                y.push(vals[0]);
                data.extend_from_slice(&vals[1..]);
                rows.push(RowIndex { entity: i, period: p });
                counts[i] += 1;
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::InsufficientData("estimation frame has no complete rows".into()));
    }
    Ok(EstimationFrame {
        dependent: dep.label(),
        regressors: regs.iter().map(|v| v.label()).collect(),
        y,
        x: Matrix::from_row_major(rows.len(), regs.len(), data),
        rows,
        entities: panel.entities().to_vec(),
        periods: panel.periods().to_vec(),
        entity_counts: counts,
    })
}

impl EstimationFrame {
    pub fn n_rows(&self) -> usize {
        self.y.len()
    }

    /// Entities that contribute at least one row.
    pub fn n_active_entities(&self) -> usize {
        self.entity_counts.iter().filter(|&&c| c > 0).count()
    }

    pub fn is_balanced(&self) -> bool {
        let mut active = self.entity_counts.iter().filter(|&&c| c > 0);
        match active.next() {
            Some(first) => {
                active.all(|c| c == first)
                    && self.entity_counts.iter().all(|&c| c > 0)
                    && self.period_span().is_some()
            }
            None => false,
        }
    }

    /// Every entity observed over the same contiguous set of periods.
    fn period_span(&self) -> Option<(usize, usize)> {
        let mut span: Option<(usize, usize)> = None;
        for g in self.groups() {
            if g.is_empty() {
                return None;
            }
            let first = self.rows[g.start].period;
            let last = self.rows[g.end - 1].period;
            if last - first + 1 != g.len() {
                return None;
            }
            match span {
                None => span = Some((first, last)),
                Some(s) if s != (first, last) => return None,
                _ => {}
            }
        }
        span
    }

    pub fn require_balanced(&self) -> Result<()> {
        if self.is_balanced() {
            Ok(())
        } else {
            Err(Error::Unbalanced(format!(
                "rows per cross-section: {:?}",
                self.entity_counts
            )))
        }
    }

    /// Contiguous row ranges per entity (aligned with `entities`).
    pub fn groups(&self) -> Vec<std::ops::Range<usize>> {
        let mut out = Vec::with_capacity(self.entity_counts.len());
        let mut start = 0;
        for &c in &self.entity_counts {
            out.push(start..start + c);
            start += c;
        }
        out
    }

    /// Group label per row.
    pub fn entity_of_row(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.entity).collect()
    }

    pub fn period_of_row(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.period).collect()
    }

    /// Calendar years of the first and last included period.
    pub fn sample_years(&self) -> (i32, i32) {
        let lo = self.rows.iter().map(|r| r.period).min().unwrap_or(0);
        let hi = self.rows.iter().map(|r| r.period).max().unwrap_or(0);
        (self.periods[lo], self.periods[hi])
    }

    pub fn periods_included(&self) -> usize {
        self.rows
            .iter()
            .map(|r| r.period)
            .collect::<BTreeSet<_>>()
            .len()
    }

    /// Within transformation on the frame's common sample: returns demeaned
    /// `y`, demeaned `X`, and the entity means of `y` and of each column.
    pub fn demeaned(&self) -> Result<WithinData> {
        let k = self.x.ncols();
        let mut y = self.y.clone();
        let mut x = self.x.clone();
        let mut y_means = Vec::new();
        let mut x_means = Vec::new();
        for (i, g) in self.groups().into_iter().enumerate() {
            if g.len() < 2 {
                return Err(Error::CrossSection {
                    entity: self.entities[i].clone(),
                    message: format!("{} usable periods, need at least 2", g.len()),
                });
            }
            let n = g.len() as f64;
            let ym = g.clone().map(|r| self.y[r]).sum::<f64>() / n;
            let xm: Vec<f64> = (0..k)
                .map(|j| g.clone().map(|r| self.x[(r, j)]).sum::<f64>() / n)
                .collect();
            for r in g {
                y[r] -= ym;
                for j in 0..k {
                    x[(r, j)] -= xm[j];
                }
            }
            y_means.push(ym);
            x_means.push(xm);
        }
        Ok(WithinData {
            y,
            x,
            y_means,
            x_means,
        })
    }
}

#[derive(Debug, Clone)]
pub struct WithinData {
    pub y: Vec<f64>,
    pub x: Matrix,
    pub y_means: Vec<f64>,
    pub x_means: Vec<Vec<f64>>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn panel_from(entities: &[&str], periods: Vec<i32>, vars: &[(&str, Vec<Vec<f64>>)]) -> PanelDataset {
        let series = vars
            .iter()
            .map(|(n, rows)| (n.to_string(), rows.iter().flatten().map(|v| Some(*v)).collect()))
            .collect();
        PanelDataset::new(entities.iter().map(|s| s.to_string()).collect(), periods, series).unwrap()
    }

    #[test]
    fn lag_masks_leading_periods() {
        let p = panel_from(&["A"], vec![2010, 2011, 2012], &[("g", vec![vec![20.0, 22.0, 25.0]])]);
        assert_eq!(p.lagged("g", 1).unwrap(), vec![None, Some(20.0), Some(22.0)]);
        let c = panel_from(&["A"], vec![1, 2, 3, 4], &[("c", vec![vec![5.0; 4]])]);
        assert_eq!(c.lagged("c", 2).unwrap(), vec![None, None, Some(5.0), Some(5.0)]);
        assert!(c.lagged("c", 4).is_err());
        assert!(c.lagged("c", 0).is_err());
        // source untouched
        assert_eq!(c.series("c").unwrap(), &vec![Some(5.0); 4]);
    }

    #[test]
    fn demean_examples() {
        let p = panel_from(
            &["A", "B"],
            vec![1, 2, 3],
            &[("v", vec![vec![2.0, 4.0, 6.0], vec![10.0, 10.0, 13.0]])],
        );
        let d = within_demean(&p, &["v"]).unwrap();
        let got: Vec<f64> = d.series["v"].iter().flatten().copied().collect();
        assert_eq!(got, vec![-2.0, 0.0, 2.0, -1.0, -1.0, 2.0]);
        assert_eq!(d.group_means["v"], vec![4.0, 11.0]);

        let q = panel_from(&["A"], vec![1, 2, 3], &[("v", vec![vec![7.0; 3]])]);
        let d = within_demean(&q, &["v"]).unwrap();
        assert!(d.series["v"].iter().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn demean_rejects_thin_entity() {
        let mut series = BTreeMap::new();
        series.insert("v".to_string(), vec![Some(1.0), Some(3.0), None, Some(2.0), None, None]);
        let p = PanelDataset::new(vec!["A".into(), "B".into()], vec![1, 2, 3], series).unwrap();
        match within_demean(&p, &["v"]) {
            Err(Error::CrossSection { entity, .. }) => assert_eq!(entity, "B"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn frame_drops_single_hole() {
        let mut series = BTreeMap::new();
        series.insert("y".to_string(), (0..6).map(|v| Some(v as f64)).collect());
        let mut x: Series = (0..6).map(|v| Some((v * v) as f64)).collect();
        x[4] = None;
        series.insert("x".to_string(), x);
        let p = PanelDataset::new(vec!["A".into(), "B".into()], vec![1, 2, 3], series).unwrap();
        let f = estimation_frame(&p, &[VariableSpec::dependent("y"), VariableSpec::regressor("x", 0)]).unwrap();
        assert_eq!(f.n_rows(), 5);
        assert_eq!(f.entity_counts, vec![3, 2]);
        assert!(!f.is_balanced());
    }

    #[test]
    fn parse_variable_labels() {
        let v = VariableSpec::parse("neetsrate(-1)", Role::Regressor).unwrap();
        assert_eq!((v.name.as_str(), v.lag), ("neetsrate", 1));
        assert_eq!(v.label(), "neetsrate(-1)");
        assert_eq!(VariableSpec::parse("gini", Role::Dependent).unwrap().lag, 0);
        assert!(VariableSpec::parse("x(-a)", Role::Regressor).is_err());
    }

    #[test]
    fn rejects_duplicate_and_bad_values() {
        let dup = "entity,year,variable,value\nA,2010,g,1\nA,2011,g,2\nA,2010,g,3\nA,2012,g,1\n";
        match read_long_csv(dup.as_bytes(), &LongCsvSchema::default()) {
            Err(Error::DuplicateObservation { entity, year, variable }) => {
                assert_eq!((entity.as_str(), year, variable.as_str()), ("A", 2010, "g"))
            }
            other => panic!("{other:?}"),
        }
        let bad = "entity,year,variable,value\nA,2010,g,1\nA,2011,g,abc\n";
        match read_long_csv(bad.as_bytes(), &LongCsvSchema::default()) {
            Err(Error::Parse { row, .. }) => assert_eq!(row, 3),
            other => panic!("{other:?}"),
        }
        let short = "entity,year,variable,value\nA,2010,g,1\nA,2011,g,2\n";
        assert!(matches!(
            read_long_csv(short.as_bytes(), &LongCsvSchema::default()),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn wide_reader_masks_empty_cells() {
        let text = "entity,year,a,b\nX,2010,1,\nX,2011,2,5\nX,2012,3,6\n";
        let p = read_wide_csv(text.as_bytes()).unwrap();
        assert_eq!(p.series("b").unwrap(), &vec![None, Some(5.0), Some(6.0)]);
        assert_eq!(p.series("a").unwrap(), &vec![Some(1.0), Some(2.0), Some(3.0)]);
    }
}
