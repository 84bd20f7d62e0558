//! CSV/JSON readers and writers for series, draws, and comparison tables.
//!
//! Floating-point fields in CSV output are printed at 17 significant
//! digits so reruns are byte-comparable and values round-trip exactly.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::assess::{ComparisonTable, PredictiveSummary};
use crate::error::{Error, Result};
use crate::inference::{ChainCounters, GibbsConfig, PosteriorDraws};
use crate::model::{CountSeries, ModelKind};
use crate::simulate::SimOutput;

/// 17-significant-digit float formatting (round-trip exact for f64).
pub fn fmt_g17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Input CSV layouts: `Long` rows are (series, label, count); `Wide` has a
/// label column followed by one column per series.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CsvLayout {
    Long,
    Wide,
}

impl std::str::FromStr for CsvLayout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "long" => Ok(CsvLayout::Long),
            "wide" => Ok(CsvLayout::Wide),
            other => Err(Error::parse(format!("unknown CSV layout `{other}`"))),
        }
    }
}

fn parse_count(field: &str, row: usize) -> Result<u64> {
    let trimmed = field.trim();
    trimmed.parse::<u64>().map_err(|_| {
        Error::parse(format!(
            "row {row}: `{trimmed}` is not a nonnegative integer count"
        ))
    })
}

/// Read one or more count series from a CSV file.
pub fn ingest_csv(path: &Path, layout: CsvLayout) -> Result<Vec<CountSeries>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)?;
    match layout {
        CsvLayout::Wide => ingest_wide(&mut reader),
        CsvLayout::Long => ingest_long(&mut reader),
    }
}

fn ingest_wide<R: std::io::Read>(reader: &mut csv::Reader<R>) -> Result<Vec<CountSeries>> {
    let headers = reader.headers()?.clone();
    if headers.len() < 2 {
        return Err(Error::parse(
            "wide CSV needs a label column plus at least one series column",
        ));
    }
    let names: Vec<String> = headers.iter().skip(1).map(|s| s.trim().to_string()).collect();
    let mut labels: Vec<String> = Vec::new();
    let mut columns: Vec<Vec<u64>> = vec![Vec::new(); names.len()];
    for (idx, record) in reader.records().enumerate() {
        let row = idx + 2; // 1-based, after the header
        let record = record?;
        if record.len() != headers.len() {
            return Err(Error::parse(format!(
                "row {row}: expected {} fields, found {}",
                headers.len(),
                record.len()
            )));
        }
        labels.push(record[0].trim().to_string());
        for (col, value) in record.iter().skip(1).enumerate() {
            columns[col].push(parse_count(value, row)?);
        }
    }
    if labels.is_empty() {
        return Err(Error::parse("CSV contains no data rows"));
    }
    names
        .into_iter()
        .zip(columns)
        .map(|(name, x)| CountSeries::new(name, labels.clone(), x))
        .collect()
}

fn ingest_long<R: std::io::Read>(reader: &mut csv::Reader<R>) -> Result<Vec<CountSeries>> {
    let headers = reader.headers()?.clone();
    if headers.len() != 3 {
        return Err(Error::parse(format!(
            "long CSV needs exactly (series, label, count) columns, found {}",
            headers.len()
        )));
    }
    let mut order: Vec<String> = Vec::new();
    let mut by_name: std::collections::HashMap<String, (Vec<String>, Vec<u64>)> =
        std::collections::HashMap::new();
    for (idx, record) in reader.records().enumerate() {
        let row = idx + 2;
        let record = record?;
        let name = record[0].trim().to_string();
        let label = record[1].trim().to_string();
        let count = parse_count(&record[2], row)?;
        if !by_name.contains_key(&name) {
            order.push(name.clone());
        }
        let entry = by_name.entry(name).or_default();
        entry.0.push(label);
        entry.1.push(count);
    }
    if order.is_empty() {
        return Err(Error::parse("CSV contains no data rows"));
    }
    order
        .into_iter()
        .map(|name| {
            let (labels, x) = by_name.remove(&name).expect("series recorded");
            CountSeries::new(name, labels, x)
        })
        .collect()
}

/// (label, x) rows for a simulated or observed series.
pub fn write_series_csv<W: Write>(mut out: W, series: &CountSeries) -> Result<()> {
    writeln!(out, "label,x")?;
    for (label, x) in series.labels.iter().zip(&series.x) {
        writeln!(out, "{label},{x}")?;
    }
    Ok(())
}

/// Full simulation output, latents included, as JSON.
pub fn write_sim_json<W: Write>(out: W, sim: &SimOutput) -> Result<()> {
    serde_json::to_writer_pretty(out, sim)?;
    Ok(())
}

/// One row per kept iteration: mu, alpha_1..alpha_T, then any latent
/// snapshots (y_1..y_T, w_1..w_T).
pub fn write_draws_csv<W: Write>(mut out: W, draws: &PosteriorDraws) -> Result<()> {
    let alpha_len = draws.alpha.first().map(|a| a.len()).unwrap_or(0);
    let mut header = vec!["draw".to_string(), "mu".to_string()];
    for i in 1..=alpha_len {
        header.push(format!("alpha_{i}"));
    }
    if let Some(y) = &draws.y {
        for i in 1..=y.first().map(|v| v.len()).unwrap_or(0) {
            header.push(format!("y_{i}"));
        }
    }
    if let Some(w) = &draws.w {
        for i in 1..=w.first().map(|v| v.len()).unwrap_or(0) {
            header.push(format!("w_{i}"));
        }
    }
    writeln!(out, "{}", header.join(","))?;
    for g in 0..draws.kept() {
        let mut fields = vec![(g + 1).to_string(), fmt_g17(draws.mu[g])];
        fields.extend(draws.alpha[g].iter().map(|a| fmt_g17(*a)));
        if let Some(y) = &draws.y {
            fields.extend(y[g].iter().map(|v| v.to_string()));
        }
        if let Some(w) = &draws.w {
            fields.extend(w[g].iter().map(|v| v.to_string()));
        }
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

/// Rebuild draws from a CSV written by [`write_draws_csv`].
///
/// The CSV carries draws only; the returned config echo is the default
/// one, and the chain diagnostics are recomputed from the mu column.
pub fn read_draws_csv(path: &Path, kind: ModelKind, p: usize) -> Result<PosteriorDraws> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers = reader.headers()?.clone();
    let find = |prefix: &str| -> Vec<usize> {
        headers
            .iter()
            .enumerate()
            .filter(|(_, h)| {
                h.strip_prefix(prefix)
                    .map(|rest| rest.parse::<usize>().is_ok())
                    .unwrap_or(false)
            })
            .map(|(i, _)| i)
            .collect()
    };
    let mu_col = headers
        .iter()
        .position(|h| h == "mu")
        .ok_or_else(|| Error::parse("draws CSV is missing the mu column"))?;
    let alpha_cols = find("alpha_");
    let y_cols = find("y_");
    let w_cols = find("w_");
    if alpha_cols.is_empty() {
        return Err(Error::parse("draws CSV has no alpha_* columns"));
    }
    let mut mu = Vec::new();
    let mut alpha = Vec::new();
    let mut y: Vec<Vec<u64>> = Vec::new();
    let mut w: Vec<Vec<u64>> = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let row = idx + 2;
        let record = record?;
        let parse_f = |col: usize| -> Result<f64> {
            record[col]
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::parse(format!("row {row}: bad float `{}`", &record[col])))
        };
        mu.push(parse_f(mu_col)?);
        alpha.push(alpha_cols.iter().map(|&c| parse_f(c)).collect::<Result<Vec<_>>>()?);
        if !y_cols.is_empty() {
            y.push(
                y_cols
                    .iter()
                    .map(|&c| parse_count(&record[c], row))
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        if !w_cols.is_empty() {
            w.push(
                w_cols
                    .iter()
                    .map(|&c| parse_count(&record[c], row))
                    .collect::<Result<Vec<_>>>()?,
            );
        }
    }
    if mu.is_empty() {
        return Err(Error::parse("draws CSV contains no kept draws"));
    }
    let mut erg = Vec::with_capacity(mu.len());
    let mut acc = 0.0;
    for (i, m) in mu.iter().enumerate() {
        acc += m;
        erg.push(acc / (i + 1) as f64);
    }
    Ok(PosteriorDraws {
        kind,
        p,
        mu,
        alpha,
        y: if y.is_empty() { None } else { Some(y) },
        w: if w.is_empty() { None } else { Some(w) },
        ergodic_mean_mu: erg,
        mu_chain_acf: Vec::new(),
        counters: ChainCounters::default(),
        config: GibbsConfig::default(),
    })
}

/// Posterior summary emitted by `fit`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FitSummary {
    pub series: String,
    pub kind: ModelKind,
    pub p: usize,
    pub kept: usize,
    pub mu_mean: f64,
    pub mu_q025: f64,
    pub mu_median: f64,
    pub mu_q975: f64,
    pub alpha_mean: Vec<f64>,
    pub alpha_mean_scalar: f64,
    pub mu_chain_acf: Vec<f64>,
    pub ergodic_mean_tail: Vec<f64>,
    pub counters: ChainCounters,
    pub config: GibbsConfig,
}

impl FitSummary {
    pub fn from_draws(series: &str, draws: &PosteriorDraws) -> Self {
        let tail_len = draws.ergodic_mean_mu.len().min(8);
        FitSummary {
            series: series.to_string(),
            kind: draws.kind,
            p: draws.p,
            kept: draws.kept(),
            mu_mean: draws.posterior_mean_mu(),
            mu_q025: draws.quantile_mu(0.025),
            mu_median: draws.quantile_mu(0.5),
            mu_q975: draws.quantile_mu(0.975),
            alpha_mean: draws.posterior_mean_alpha(),
            alpha_mean_scalar: draws.posterior_mean_alpha_scalar(),
            mu_chain_acf: draws.mu_chain_acf.clone(),
            ergodic_mean_tail: draws.ergodic_mean_mu
                [draws.ergodic_mean_mu.len() - tail_len..]
                .to_vec(),
            counters: draws.counters,
            config: draws.config.clone(),
        }
    }
}

/// (label, observed, mean, var, lo, hi) rows for plot-ready prediction
/// bands.
pub fn write_predictive_csv<W: Write>(
    mut out: W,
    pred: &PredictiveSummary,
    data: &CountSeries,
) -> Result<()> {
    writeln!(out, "label,observed,mean,var,lo,hi")?;
    for t in 0..data.len() {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            data.labels[t],
            data.x[t],
            fmt_g17(pred.mean[t]),
            fmt_g17(pred.var[t]),
            pred.lo[t],
            pred.hi[t]
        )?;
    }
    Ok(())
}

/// Long-form comparison table: one row per (series, kind, p) cell.
pub fn write_table_csv<W: Write>(mut out: W, table: &ComparisonTable) -> Result<()> {
    writeln!(out, "series,kind,p,l_measure,is_min,error")?;
    for row in &table.rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            row.series,
            row.kind,
            row.p.map(|p| p.to_string()).unwrap_or_default(),
            row.l_measure.map(fmt_g17).unwrap_or_default(),
            row.is_min,
            row.error.clone().unwrap_or_default()
        )?;
    }
    Ok(())
}

/// Aligned text table, one row per series and one column per (kind, p)
/// cell; per-group minima are marked with `*`.
pub fn format_table_text(table: &ComparisonTable) -> String {
    let mut series_order: Vec<&str> = Vec::new();
    for row in &table.rows {
        if !series_order.contains(&row.series.as_str()) {
            series_order.push(&row.series);
        }
    }
    let mut columns: Vec<(ModelKind, Option<usize>)> = Vec::new();
    for &kind in &table.kinds {
        match kind {
            ModelKind::Inar1 => columns.push((kind, None)),
            _ => {
                for &p in &table.p_values {
                    columns.push((kind, Some(p)));
                }
            }
        }
    }
    let mut header = vec!["series".to_string()];
    for (kind, p) in &columns {
        header.push(match p {
            Some(p) => format!("{kind}:p{p}"),
            None => kind.to_string(),
        });
    }
    let mut grid: Vec<Vec<String>> = vec![header];
    for name in &series_order {
        let mut line = vec![(*name).to_string()];
        for (kind, p) in &columns {
            let cell = table
                .rows
                .iter()
                .find(|r| r.series == *name && r.kind == *kind && r.p == *p);
            line.push(match cell {
                Some(c) => match c.l_measure {
                    Some(l) => format!("{}{:.2}", if c.is_min { "*" } else { "" }, l),
                    None => "ERR".to_string(),
                },
                None => String::new(),
            });
        }
        grid.push(line);
    }
    let widths: Vec<usize> = (0..grid[0].len())
        .map(|c| grid.iter().map(|line| line[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for line in &grid {
        let rendered: Vec<String> = line
            .iter()
            .enumerate()
            .map(|(c, cell)| format!("{cell:>width$}", width = widths[c]))
            .collect();
        out.push_str(&rendered.join("  "));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    #[test]
    fn wide_csv_round_trip() {
        let f = write_temp("year,north,south\n1990,3,0\n1991,5,2\n1992,1,1\n");
        let series = ingest_csv(f.path(), CsvLayout::Wide).unwrap();
        assert_eq!(series.len(), 2);
        assert_eq!(series[0].name, "north");
        assert_eq!(series[0].x, vec![3, 5, 1]);
        assert_eq!(series[1].labels, vec!["1990", "1991", "1992"]);
    }

    #[test]
    fn wide_csv_32_series_29_rows() {
        let mut content = String::from("year");
        for s in 1..=32 {
            content.push_str(&format!(",s{s}"));
        }
        content.push('\n');
        for row in 0..29 {
            content.push_str(&(1990 + row).to_string());
            for s in 1..=32 {
                content.push_str(&format!(",{}", (row * s) % 7));
            }
            content.push('\n');
        }
        let f = write_temp(&content);
        let series = ingest_csv(f.path(), CsvLayout::Wide).unwrap();
        assert_eq!(series.len(), 32);
        assert!(series.iter().all(|s| s.len() == 29));
    }

    #[test]
    fn long_csv_groups_series() {
        let f = write_temp(
            "series,label,count\nA,1,3\nA,2,5\nB,1,0\nA,3,2\nB,2,4\n",
        );
        let series = ingest_csv(f.path(), CsvLayout::Long).unwrap();
        assert_eq!(series.len(), 2);
        assert_eq!(series[0].name, "A");
        assert_eq!(series[0].x, vec![3, 5, 2]);
        assert_eq!(series[1].x, vec![0, 4]);
    }

    #[test]
    fn csv_error_paths() {
        let empty = write_temp("");
        assert!(ingest_csv(empty.path(), CsvLayout::Wide).is_err());

        let negative = write_temp("year,a\n1990,-3\n");
        let err = ingest_csv(negative.path(), CsvLayout::Wide).unwrap_err();
        assert!(err.to_string().contains("row 2"), "{err}");

        let fractional = write_temp("year,a\n1990,2.5\n");
        assert!(ingest_csv(fractional.path(), CsvLayout::Wide).is_err());

        let ragged = write_temp("year,a,b\n1990,1,2\n1991,3\n");
        assert!(ingest_csv(ragged.path(), CsvLayout::Wide).is_err());
    }

    #[test]
    fn draws_csv_round_trip() {
        use crate::inference::{fit_type_b, GibbsConfig, Priors};
        let data = CountSeries::from_counts("d", vec![3, 1, 4, 2, 5]).unwrap();
        let config = GibbsConfig {
            iterations: 24,
            burn_in: 4,
            thin: 2,
            seed: 17,
            ..GibbsConfig::default()
        };
        let draws = fit_type_b(&data, 1, &Priors::default(), &config).unwrap();
        let mut buf = Vec::new();
        write_draws_csv(&mut buf, &draws).unwrap();
        let f = write_temp(std::str::from_utf8(&buf).unwrap());
        let back = read_draws_csv(f.path(), ModelKind::TypeB, 1).unwrap();
        assert_eq!(back.kept(), draws.kept());
        assert_eq!(back.mu, draws.mu);
        assert_eq!(back.alpha, draws.alpha);
        assert_eq!(back.y, draws.y);
        assert_eq!(back.w, draws.w);
    }

    #[test]
    fn g17_formatting_round_trips() {
        for &x in &[0.1, 1.0 / 3.0, 2.0f64.sqrt(), 1e-300, 12345.6789] {
            let s = fmt_g17(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back, x, "{s}");
        }
    }

    #[test]
    fn text_table_marks_minima() {
        use crate::assess::GridCell;
        let table = ComparisonTable {
            nu: 0.5,
            p_values: vec![0, 1],
            kinds: vec![ModelKind::TypeA, ModelKind::Inar1],
            rows: vec![
                GridCell {
                    series: "s".into(),
                    kind: ModelKind::TypeA,
                    p: Some(0),
                    l_measure: Some(4.25),
                    error: None,
                    is_min: false,
                },
                GridCell {
                    series: "s".into(),
                    kind: ModelKind::TypeA,
                    p: Some(1),
                    l_measure: Some(3.125),
                    error: None,
                    is_min: true,
                },
                GridCell {
                    series: "s".into(),
                    kind: ModelKind::Inar1,
                    p: None,
                    l_measure: Some(5.5),
                    error: None,
                    is_min: true,
                },
            ],
        };
        let text = format_table_text(&table);
        assert!(text.contains("*3.13") || text.contains("*3.12"), "{text}");
        assert!(text.contains("typeA:p0"));
        assert!(text.contains("inar1"));
    }
}
