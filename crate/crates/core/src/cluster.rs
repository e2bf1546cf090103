//! Median-split institutional clustering, sub-index stability profiles,
//! and the Gini coefficient from grouped income shares.

use std::collections::BTreeSet;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use crate::diagnostics::pearson as pearson_corr;

/// The institutions sub-indices in publication order.
pub const SUBINDEX_NAMES: [&str; 21] = [
    "Property rights",
    "Intellectual property protection",
    "Diversion of public funds",
    "Public trust in politicians",
    "Irregular payments and bribes",
    "Judicial independence",
    "Favoritism in decisions of government officials",
    "Efficiency of government spending",
    "Burden of government regulation",
    "Efficiency of legal framework in setting disputes",
    "Efficiency of legal framework in challenging regulations",
    "Transparency of government policymaking",
    "Business costs of terrorism",
    "Business costs of crime and violence",
    "Organized crime",
    "Reliability of police services",
    "Ethical behaviour of firms",
    "Strength of auditing and reporting standards",
    "Efficacy of corporate boards",
    "Protection of minority shareholders interests",
    "Strength of investor protection",
];

/// Upper bound of each sub-index scale (the last one runs to 10).
pub fn subindex_scale_max(index: usize) -> f64 {
    if index == 20 {
        10.0
    } else {
        7.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstitutionScores {
    pub country: String,
    pub pillar: f64,
    pub subindices: [f64; 21],
}

impl InstitutionScores {
    pub fn validate(&self) -> Result<()> {
        let check = |name: &str, v: f64, hi: f64| {
            if v.is_finite() && (1.0..=hi).contains(&v) {
                Ok(())
            } else {
                Err(Error::invalid(format!(
                    "{}: `{name}` = {v} outside [1, {hi}]",
                    self.country
                )))
            }
        };
        check("pillar", self.pillar, 7.0)?;
        for (i, v) in self.subindices.iter().enumerate() {
            check(SUBINDEX_NAMES[i], *v, subindex_scale_max(i))?;
        }
        Ok(())
    }

    pub fn score(&self, criterion: Criterion) -> f64 {
        match criterion {
            Criterion::Pillar => self.pillar,
            Criterion::SubIndex(i) => self.subindices[i],
        }
    }
}

fn normalize_header(s: &str) -> String {
    s.trim()
        .chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .collect::<String>()
        .to_ascii_lowercase()
}

/// Column of the `i`-th sub-index: either its name (any case or
/// punctuation) or `subNN`.
fn find_subindex_column(headers: &[String], i: usize) -> Option<usize> {
    let by_name = normalize_header(SUBINDEX_NAMES[i]);
    let by_code = format!("sub{:02}", i + 1);
    headers.iter().position(|h| {
        let n = normalize_header(h);
        n == by_name || n == by_code || n.starts_with(&by_code) && n[by_code.len()..] == by_name
    })
}

/// Parses `country,pillar,<21 sub-index columns>`.
pub fn read_scores_csv<R: Read>(reader: R) -> Result<Vec<InstitutionScores>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| normalize_header(h) == normalize_header(name))
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let country_col = col("country")?;
    let pillar_col = col("pillar")?;
    let sub_cols: Vec<usize> = (0..21)
        .map(|i| find_subindex_column(&headers, i).ok_or_else(|| Error::MissingColumn(SUBINDEX_NAMES[i].to_string())))
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = k + 2;
        let field = |c: usize, name: &str| -> Result<f64> {
            let raw = rec.get(c).unwrap_or("");
            raw.parse::<f64>().map_err(|_| Error::Parse {
                row,
                message: format!("`{name}` value `{raw}` is not a number"),
            })
        };
        let country = rec.get(country_col).unwrap_or("").to_string();
        if country.is_empty() {
            return Err(Error::Parse {
                row,
                message: "empty country".into(),
            });
        }
        if !seen.insert(country.clone()) {
            return Err(Error::Parse {
                row,
                message: format!("country `{country}` listed twice"),
            });
        }
        let mut subindices = [0.0; 21];
        for (i, &c) in sub_cols.iter().enumerate() {
            subindices[i] = field(c, SUBINDEX_NAMES[i])?;
        }
        let s = InstitutionScores {
            country,
            pillar: field(pillar_col, "pillar")?,
            subindices,
        };
        s.validate().map_err(|e| Error::Parse {
            row,
            message: e.to_string(),
        })?;
        out.push(s);
    }
    Ok(out)
}

/// Writes `country,pillar,sub01..sub21` with shortest round-trip values.
pub fn write_scores_csv<W: std::io::Write>(scores: &[InstitutionScores], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["country".to_string(), "pillar".to_string()];
    header.extend((1..=21).map(|i| format!("sub{i:02}")));
    w.write_record(&header)?;
    for s in scores {
        let mut rec = vec![s.country.clone(), s.pillar.to_string()];
        rec.extend(s.subindices.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<writer>", e))?;
    Ok(())
}

pub fn load_scores_csv(path: impl AsRef<Path>) -> Result<Vec<InstitutionScores>> {
    let path = path.as_ref();
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_scores_csv(f)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Pillar,
    /// Zero-based sub-index position.
    SubIndex(usize),
}

impl Criterion {
    /// The pillar followed by the 21 sub-indices.
    pub fn all() -> Vec<Criterion> {
        std::iter::once(Criterion::Pillar)
            .chain((0..21).map(Criterion::SubIndex))
            .collect()
    }

    pub fn name(self) -> String {
        match self {
            Criterion::Pillar => "Institutions pillar".to_string(),
            Criterion::SubIndex(i) => format!("{}. {}", i + 1, SUBINDEX_NAMES[i]),
        }
    }
}

/// Where a country scoring exactly at the median goes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieRule {
    #[default]
    Extractive,
    Inclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Membership {
    #[serde(rename = "I")]
    Inclusive,
    #[serde(rename = "E")]
    Extractive,
}

impl Membership {
    pub fn code(self) -> char {
        match self {
            Membership::Inclusive => 'I',
            Membership::Extractive => 'E',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub criterion: String,
    pub threshold: f64,
    /// Countries strictly above the threshold, alphabetically.
    pub inclusive: Vec<String>,
    pub extractive: Vec<String>,
}

impl ClusterAssignment {
    pub fn membership(&self, country: &str) -> Option<Membership> {
        if self.inclusive.iter().any(|c| c == country) {
            Some(Membership::Inclusive)
        } else if self.extractive.iter().any(|c| c == country) {
            Some(Membership::Extractive)
        } else {
            None
        }
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Splits at the sample median: above goes inclusive, below extractive,
/// ties follow `tie`.
pub fn median_split(scores: &[(String, f64)], tie: TieRule) -> Result<ClusterAssignment> {
    median_split_named("scores", scores, tie)
}

fn median_split_named(criterion: &str, scores: &[(String, f64)], tie: TieRule) -> Result<ClusterAssignment> {
    if scores.len() < 2 {
        return Err(Error::InsufficientData("median split needs at least two countries".into()));
    }
    if let Some((c, v)) = scores.iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::invalid(format!("{c}: score {v} is not finite")));
    }
    let values: Vec<f64> = scores.iter().map(|(_, v)| *v).collect();
    if values.iter().all(|v| *v == values[0]) {
        return Err(Error::Degenerate(format!("{criterion}: all scores equal, no informative split")));
    }
    let threshold = median(&values);
    let mut inclusive = Vec::new();
    let mut extractive = Vec::new();
    for (c, v) in scores {
        let up = *v > threshold || (*v == threshold && tie == TieRule::Inclusive);
        if up {
            inclusive.push(c.clone());
        } else {
            extractive.push(c.clone());
        }
    }
    inclusive.sort();
    extractive.sort();
    Ok(ClusterAssignment {
        criterion: criterion.to_string(),
        threshold,
        inclusive,
        extractive,
    })
}

pub fn split_by(scores: &[InstitutionScores], criterion: Criterion, tie: TieRule) -> Result<ClusterAssignment> {
    let pairs: Vec<(String, f64)> = scores.iter().map(|s| (s.country.clone(), s.score(criterion))).collect();
    median_split_named(&criterion.name(), &pairs, tie)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountryProfile {
    pub country: String,
    pub main: Membership,
    /// Membership under the pillar and each sub-index, in criterion order.
    pub memberships: Vec<Membership>,
    pub inclusive_count: usize,
    /// Criteria on which the country leaves its pillar cluster.
    pub flips: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub criteria: Vec<String>,
    pub assignments: Vec<ClusterAssignment>,
    pub countries: Vec<CountryProfile>,
    /// Countries in the same cluster under every criterion.
    pub stable: Vec<String>,
    /// Sub-indices whose split equals the pillar split.
    pub matching_subindices: Vec<String>,
}

impl StabilityReport {
    /// `country,<criterion...>` matrix with I/E cells.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("country");
        for c in &self.criteria {
            out.push(',');
            out.push_str(&csv_field(c));
        }
        out.push('\n');
        for p in &self.countries {
            out.push_str(&csv_field(&p.country));
            for m in &p.memberships {
                out.push(',');
                out.push(m.code());
            }
            out.push('\n');
        }
        out
    }

    pub fn profile(&self, country: &str) -> Option<&CountryProfile> {
        self.countries.iter().find(|p| p.country == country)
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Membership of every country under the pillar and each of the 21
/// sub-indices.
pub fn subindex_stability(scores: &[InstitutionScores], tie: TieRule) -> Result<StabilityReport> {
    for s in scores {
        s.validate()?;
    }
    let criteria = Criterion::all();
    let assignments: Vec<ClusterAssignment> = criteria
        .iter()
        .map(|&c| split_by(scores, c, tie))
        .collect::<Result<_>>()?;
    let main = &assignments[0];
    let mut countries: Vec<String> = scores.iter().map(|s| s.country.clone()).collect();
    countries.sort();
    let profiles: Vec<CountryProfile> = countries
        .iter()
        .map(|c| {
            let memberships: Vec<Membership> = assignments
                .iter()
                .map(|a| a.membership(c).expect("every country assigned"))
                .collect();
            let main_m = memberships[0];
            CountryProfile {
                country: c.clone(),
                main: main_m,
                inclusive_count: memberships.iter().filter(|m| **m == Membership::Inclusive).count(),
                flips: criteria
                    .iter()
                    .zip(&memberships)
                    .filter(|(_, m)| **m != main_m)
                    .map(|(cr, _)| cr.name())
                    .collect(),
                memberships,
            }
        })
        .collect();
    let stable = profiles
        .iter()
        .filter(|p| p.flips.is_empty())
        .map(|p| p.country.clone())
        .collect();
    let matching_subindices = criteria
        .iter()
        .zip(&assignments)
        .skip(1)
        .filter(|(_, a)| a.inclusive == main.inclusive)
        .map(|(c, _)| c.name())
        .collect();
    Ok(StabilityReport {
        criteria: criteria.iter().map(|c| c.name()).collect(),
        assignments,
        countries: profiles,
        stable,
        matching_subindices,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncomeGroup {
    pub population_share: f64,
    pub income_share: f64,
}

/// Population groups with their shares of population and income.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncomeDistribution {
    groups: Vec<IncomeGroup>,
}

impl IncomeDistribution {
    pub fn new(groups: Vec<IncomeGroup>) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::invalid("income distribution has no groups"));
        }
        if groups
            .iter()
            .any(|g| !(g.population_share >= 0.0 && g.income_share >= 0.0) || !g.population_share.is_finite() || !g.income_share.is_finite())
        {
            return Err(Error::invalid("shares must be finite and non-negative"));
        }
        let sp: f64 = groups.iter().map(|g| g.population_share).sum();
        let si: f64 = groups.iter().map(|g| g.income_share).sum();
        if (sp - 1.0).abs() > 1e-9 || (si - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "population shares sum to {sp}, income shares to {si}; both must be 1"
            )));
        }
        if groups.iter().any(|g| g.population_share == 0.0 && g.income_share > 0.0) {
            return Err(Error::invalid("income share on a group with no population"));
        }
        Ok(IncomeDistribution { groups })
    }

    /// Equal-population groups with the given income shares.
    pub fn from_income_shares(shares: &[f64]) -> Result<Self> {
        let p = 1.0 / shares.len() as f64;
        IncomeDistribution::new(
            shares
                .iter()
                .map(|&s| IncomeGroup {
                    population_share: p,
                    income_share: s,
                })
                .collect(),
        )
    }

    pub fn groups(&self) -> &[IncomeGroup] {
        &self.groups
    }
}

/// `G = 1 - Σ s_i (p_i + 2 r_i)`, groups ordered by per-capita income and
/// `r_i` the population share of the groups after `i`. Result in [0, 1].
pub fn gini_from_distribution(d: &IncomeDistribution) -> f64 {
    let mut g: Vec<IncomeGroup> = d.groups.iter().copied().filter(|g| g.population_share > 0.0).collect();
    g.sort_by(|a, b| (a.income_share / a.population_share).total_cmp(&(b.income_share / b.population_share)));
    let mut richer: f64 = g.iter().map(|x| x.population_share).sum();
    let mut acc = 0.0;
    for x in &g {
        richer -= x.population_share;
        acc += x.income_share * (x.population_share + 2.0 * richer.max(0.0));
    }
    (1.0 - acc).clamp(0.0, 1.0)
}
