//! Price panels, log-returns and per-asset normalisation.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, RmtError};
use crate::linalg::Matrix;

/// Raw price quotes, rows = times, columns = assets. Only complete,
/// strictly positive columns survive loading.
#[derive(Debug, Clone)]
pub struct PricePanel {
    pub prices: Matrix,
    pub asset_ids: Vec<String>,
    pub timestamps: Vec<String>,
    pub delta_t: String,
    /// Assets removed by the survivorship filter, with the reason.
    pub dropped: Vec<DroppedAsset>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedAsset {
    pub asset_id: String,
    pub missing: usize,
    pub nonpositive: usize,
}

impl PricePanel {
    /// Builds a panel from complete data, validating the invariants.
    pub fn new(prices: Matrix, asset_ids: Vec<String>, timestamps: Vec<String>, delta_t: impl Into<String>) -> Result<Self> {
        if prices.cols() != asset_ids.len() || prices.rows() != timestamps.len() {
            return Err(RmtError::Shape(format!(
                "{}x{} prices vs {} timestamps and {} assets",
                prices.rows(),
                prices.cols(),
                timestamps.len(),
                asset_ids.len()
            )));
        }
        check_monotone(&timestamps)?;
        for j in 0..prices.cols() {
            for i in 0..prices.rows() {
                let v = prices[(i, j)];
                if !(v > 0.0) {
                    return Err(RmtError::NonPositivePrice { asset: asset_ids[j].clone(), row: i, value: v });
                }
            }
        }
        Ok(Self { prices, asset_ids, timestamps, delta_t: delta_t.into(), dropped: Vec::new() })
    }

    pub fn n_times(&self) -> usize {
        self.prices.rows()
    }

    pub fn n_assets(&self) -> usize {
        self.prices.cols()
    }
}

/// Delimited-text layout of a price file.
#[derive(Debug, Clone)]
pub struct FormatOptions {
    /// Field separator; `None` sniffs tab vs comma from the header line.
    pub delimiter: Option<u8>,
    /// Drop assets with any missing or nonpositive quote. When off, such
    /// assets are an error instead.
    pub drop_incomplete: bool,
    pub delta_t: String,
}

impl Default for FormatOptions {
    fn default() -> Self {
        Self { delimiter: None, drop_incomplete: true, delta_t: "1d".into() }
    }
}

/// Reads a header row of asset ids followed by one row per time, first
/// column the timestamp. Empty or unparsable cells count as missing.
pub fn load_price_panel(path: impl AsRef<Path>, opts: &FormatOptions) -> Result<PricePanel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| RmtError::Io { path: path.display().to_string(), source })?;
    parse_price_panel(&text, opts)
}

struct RawTable {
    asset_ids: Vec<String>,
    timestamps: Vec<String>,
    cells: Vec<Vec<Option<f64>>>,
}

fn read_raw_table(text: &str, opts: &FormatOptions) -> Result<RawTable> {
    let delimiter = opts.delimiter.unwrap_or_else(|| sniff_delimiter(text));
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let header = reader.headers().map_err(|e| RmtError::Parse { line: 1, msg: e.to_string() })?.clone();
    let asset_ids: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
    let n_raw = asset_ids.len();

    let mut timestamps = Vec::new();
    let mut cells: Vec<Vec<Option<f64>>> = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let line = idx + 2;
        let record = record.map_err(|e| RmtError::Parse { line, msg: e.to_string() })?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let mut fields = record.iter();
        let ts = fields.next().unwrap_or_default().to_owned();
        let mut row: Vec<Option<f64>> = fields.map(|f| f.parse::<f64>().ok().filter(|v| v.is_finite())).collect();
        if row.len() > n_raw {
            return Err(RmtError::Parse { line, msg: format!("{} values for {} assets", row.len(), n_raw) });
        }
        row.resize(n_raw, None);
        timestamps.push(ts);
        cells.push(row);
    }
    check_monotone(&timestamps)?;
    Ok(RawTable { asset_ids, timestamps, cells })
}

/// In-memory counterpart of [`load_price_panel`].
pub fn parse_price_panel(text: &str, opts: &FormatOptions) -> Result<PricePanel> {
    let RawTable { asset_ids, timestamps, cells } = read_raw_table(text, opts)?;

    let mut keep = Vec::new();
    let mut dropped = Vec::new();
    for (j, id) in asset_ids.iter().enumerate() {
        let missing = cells.iter().filter(|r| r[j].is_none()).count();
        let nonpositive = cells.iter().filter(|r| matches!(r[j], Some(v) if v <= 0.0)).count();
        if missing + nonpositive == 0 {
            keep.push(j);
        } else if opts.drop_incomplete {
            dropped.push(DroppedAsset { asset_id: id.clone(), missing, nonpositive });
        } else {
            return Err(invalid(format!("asset {id} has {missing} missing and {nonpositive} nonpositive quotes")));
        }
    }
    if keep.is_empty() || timestamps.is_empty() {
        return Err(RmtError::NoSurvivingAssets);
    }

    let t = timestamps.len();
    let mut prices = Matrix::zeros(t, keep.len());
    for (i, row) in cells.iter().enumerate() {
        for (jj, &j) in keep.iter().enumerate() {
            prices[(i, jj)] = row[j].expect("complete column");
        }
    }
    Ok(PricePanel {
        prices,
        asset_ids: keep.iter().map(|&j| asset_ids[j].clone()).collect(),
        timestamps,
        delta_t: opts.delta_t.clone(),
        dropped,
    })
}

fn sniff_delimiter(text: &str) -> u8 {
    let first = text.lines().next().unwrap_or_default();
    if first.matches('\t').count() > first.matches(',').count() {
        b'\t'
    } else {
        b','
    }
}

/// Numeric timestamps compare as numbers, anything else lexically (which
/// orders ISO-8601 dates correctly).
fn check_monotone(ts: &[String]) -> Result<()> {
    let numeric: Option<Vec<f64>> = ts.iter().map(|s| s.parse::<f64>().ok()).collect();
    for i in 1..ts.len() {
        let increasing = match &numeric {
            Some(v) => v[i] > v[i - 1],
            None => ts[i] > ts[i - 1],
        };
        if !increasing {
            return Err(RmtError::NonMonotoneTimestamps { row: i, prev: ts[i - 1].clone(), next: ts[i].clone() });
        }
    }
    Ok(())
}

/// G_i(t) = ln S_i(t+1) - ln S_i(t) between consecutive rows.
pub fn compute_log_returns(panel: &PricePanel) -> Result<Matrix> {
    let (t_raw, n) = (panel.n_times(), panel.n_assets());
    if t_raw < 2 {
        return Err(invalid(format!("need at least 2 price rows, got {t_raw}")));
    }
    let mut g = Matrix::zeros(t_raw - 1, n);
    for j in 0..n {
        let mut prev = checked_ln(panel, 0, j)?;
        for i in 1..t_raw {
            let cur = checked_ln(panel, i, j)?;
            g[(i - 1, j)] = cur - prev;
            prev = cur;
        }
    }
    Ok(g)
}

fn checked_ln(panel: &PricePanel, i: usize, j: usize) -> Result<f64> {
    let v = panel.prices[(i, j)];
    if v > 0.0 {
        Ok(v.ln())
    } else {
        Err(RmtError::NonPositivePrice { asset: panel.asset_ids[j].clone(), row: i, value: v })
    }
}

/// Normalised returns: zero mean and unit (population) variance per column.
#[derive(Debug, Clone)]
pub struct ReturnPanel {
    pub x: Matrix,
    pub asset_ids: Vec<String>,
    pub per_asset_mean: Vec<f64>,
    pub per_asset_sigma: Vec<f64>,
}

impl ReturnPanel {
    pub fn n_times(&self) -> usize {
        self.x.rows()
    }

    pub fn n_assets(&self) -> usize {
        self.x.cols()
    }

    /// Returns the panel with columns reordered by `order`.
    pub fn permute_assets(&self, order: &[usize]) -> ReturnPanel {
        ReturnPanel {
            x: self.x.select_columns(order),
            asset_ids: order.iter().map(|&j| self.asset_ids[j].clone()).collect(),
            per_asset_mean: order.iter().map(|&j| self.per_asset_mean[j]).collect(),
            per_asset_sigma: order.iter().map(|&j| self.per_asset_sigma[j]).collect(),
        }
    }
}

/// Column mean and population standard deviation (divisor T), two-pass.
pub fn column_moments(m: &Matrix, j: usize) -> (f64, f64) {
    let t = m.rows() as f64;
    let mean = (0..m.rows()).map(|i| m[(i, j)]).sum::<f64>() / t;
    let var = (0..m.rows()).map(|i| (m[(i, j)] - mean).powi(2)).sum::<f64>() / t;
    (mean, var.sqrt())
}

/// X_it = (G_i(t) - ⟨G_i⟩) / σ_i with the population σ, so that
/// (1/T)XᵀX has an exact unit diagonal.
pub fn normalize_returns(g: &Matrix, asset_ids: &[String]) -> Result<ReturnPanel> {
    if asset_ids.len() != g.cols() {
        return Err(RmtError::Shape(format!("{} ids for {} columns", asset_ids.len(), g.cols())));
    }
    if g.rows() == 0 {
        return Err(RmtError::Empty("return matrix has no rows"));
    }
    let mut x = g.clone();
    let mut means = Vec::with_capacity(g.cols());
    let mut sigmas = Vec::with_capacity(g.cols());
    for j in 0..g.cols() {
        let (mean, sigma) = column_moments(g, j);
        // Relative to the column scale, anything this small is round-off.
        let scale = (0..g.rows()).map(|i| g[(i, j)].abs()).fold(0.0, f64::max);
        if !(sigma > 1e-14 * scale) {
            return Err(RmtError::ZeroVariance(asset_ids[j].clone()));
        }
        for i in 0..g.rows() {
            x[(i, j)] = (g[(i, j)] - mean) / sigma;
        }
        // A second pass removes the O(eps) residue of the first.
        let (m2, s2) = column_moments(&x, j);
        for i in 0..g.rows() {
            x[(i, j)] = (x[(i, j)] - m2) / s2;
        }
        means.push(mean);
        sigmas.push(sigma);
    }
    Ok(ReturnPanel { x, asset_ids: asset_ids.to_vec(), per_asset_mean: means, per_asset_sigma: sigmas })
}

/// Wraps an already normalised or synthetic matrix, renormalising it.
pub fn return_panel_from_matrix(g: &Matrix) -> Result<ReturnPanel> {
    let ids: Vec<String> = (0..g.cols()).map(|j| format!("A{j}")).collect();
    normalize_returns(g, &ids)
}

/// Loads, filters, differences and normalises in one go.
pub fn load_return_panel(path: impl AsRef<Path>, opts: &FormatOptions) -> Result<ReturnPanel> {
    let panel = load_price_panel(path, opts)?;
    let g = compute_log_returns(&panel)?;
    normalize_returns(&g, &panel.asset_ids)
}

/// Reads a table of returns in the price-file layout (timestamps first,
/// one column per asset) and normalises it. Values may have any sign;
/// incomplete columns are dropped or rejected as for prices.
pub fn parse_return_table(text: &str, opts: &FormatOptions) -> Result<(ReturnPanel, Vec<String>)> {
    let RawTable { asset_ids, timestamps, cells } = read_raw_table(text, opts)?;
    let mut keep = Vec::new();
    for (j, id) in asset_ids.iter().enumerate() {
        let missing = cells.iter().filter(|r| r[j].is_none()).count();
        if missing == 0 {
            keep.push(j);
        } else if !opts.drop_incomplete {
            return Err(invalid(format!("asset {id} has {missing} missing returns")));
        }
    }
    if keep.is_empty() || timestamps.is_empty() {
        return Err(RmtError::NoSurvivingAssets);
    }
    let mut g = Matrix::zeros(timestamps.len(), keep.len());
    for (i, row) in cells.iter().enumerate() {
        for (jj, &j) in keep.iter().enumerate() {
            g[(i, jj)] = row[j].expect("complete column");
        }
    }
    let ids: Vec<String> = keep.iter().map(|&j| asset_ids[j].clone()).collect();
    Ok((normalize_returns(&g, &ids)?, timestamps))
}

pub fn load_return_table(path: impl AsRef<Path>, opts: &FormatOptions) -> Result<(ReturnPanel, Vec<String>)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| RmtError::Io { path: path.display().to_string(), source })?;
    parse_return_table(&text, opts)
}

/// Writes a matrix in the price-file layout with the given header.
pub fn format_panel(asset_ids: &[String], timestamps: &[String], m: &Matrix) -> Result<String> {
    if asset_ids.len() != m.cols() || timestamps.len() != m.rows() {
        return Err(RmtError::Shape(format!(
            "{}x{} matrix with {} timestamps and {} ids",
            m.rows(),
            m.cols(),
            timestamps.len(),
            asset_ids.len()
        )));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| RmtError::Parse { line: 0, msg: e.to_string() };
    w.write_record(std::iter::once("time").chain(asset_ids.iter().map(String::as_str))).map_err(csv_err)?;
    for (i, ts) in timestamps.iter().enumerate() {
        let row: Vec<String> = std::iter::once(ts.clone()).chain(m.row(i).iter().map(|v| v.to_string())).collect();
        w.write_record(&row).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| RmtError::Parse { line: 0, msg: e.to_string() })?;
    Ok(String::from_utf8(bytes).expect("utf-8 input"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|j| format!("s{j}")).collect()
    }

    #[test]
    fn return_table_round_trip() {
        let g = Matrix::from_rows(&[vec![0.5, -1.0], vec![-0.5, 2.0], vec![1.5, 0.25]]).unwrap();
        let ts: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let text = format_panel(&ids(2), &ts, &g).unwrap();
        let (rp, back_ts) = parse_return_table(&text, &FormatOptions::default()).unwrap();
        assert_eq!(back_ts, ts);
        assert_eq!(rp.asset_ids, ids(2));
        assert_eq!(rp.x, normalize_returns(&g, &ids(2)).unwrap().x);
        let gappy = "t,x,y\n1,0.1,\n2,-0.3,0.2\n3,0.4,0.1\n";
        assert_eq!(parse_return_table(gappy, &FormatOptions::default()).unwrap().0.asset_ids, vec!["x"]);
    }

    #[test]
    fn gap_drops_asset() {
        let text = "date,A,B,C\n1,10,20,30\n2,11,,31\n3,12,22,32\n";
        let p = parse_price_panel(text, &FormatOptions::default()).unwrap();
        assert_eq!(p.asset_ids, vec!["A", "C"]);
        assert_eq!(p.dropped[0].asset_id, "B");
        assert_eq!(p.dropped[0].missing, 1);
    }

    #[test]
    fn complete_file_retains_everything() {
        let text = "t\tA\tB\n2020-01-01\t1\t2\n2020-01-02\t1.5\t2.5\n";
        let p = parse_price_panel(text, &FormatOptions::default()).unwrap();
        assert_eq!(p.n_assets(), 2);
        assert_eq!(p.n_times(), 2);
        assert!(p.dropped.is_empty());
    }

    #[test]
    fn empty_file_has_no_survivors() {
        let err = parse_price_panel("", &FormatOptions::default()).unwrap_err();
        assert!(matches!(err, RmtError::NoSurvivingAssets), "{err}");
        let err = parse_price_panel("date,A\n", &FormatOptions::default()).unwrap_err();
        assert!(matches!(err, RmtError::NoSurvivingAssets));
    }

    #[test]
    fn nonpositive_price_is_filtered() {
        let text = "date,A,B\n1,10,0\n2,11,3\n";
        let p = parse_price_panel(text, &FormatOptions::default()).unwrap();
        assert_eq!(p.asset_ids, vec!["A"]);
        assert_eq!(p.dropped[0].nonpositive, 1);
    }

    #[test]
    fn incomplete_is_error_without_drop() {
        let opts = FormatOptions { drop_incomplete: false, ..Default::default() };
        assert!(parse_price_panel("date,A,B\n1,10,\n2,11,3\n", &opts).is_err());
    }

    #[test]
    fn rejects_non_monotone_timestamps() {
        let err = parse_price_panel("date,A\n2,1\n1,2\n", &FormatOptions::default()).unwrap_err();
        assert!(matches!(err, RmtError::NonMonotoneTimestamps { row: 1, .. }));
        let err = parse_price_panel("date,A\n2020-01-02,1\n2020-01-02,2\n", &FormatOptions::default()).unwrap_err();
        assert!(matches!(err, RmtError::NonMonotoneTimestamps { .. }));
    }

    fn panel(cols: &[&[f64]]) -> PricePanel {
        let t = cols[0].len();
        let mut m = Matrix::zeros(t, cols.len());
        for (j, c) in cols.iter().enumerate() {
            for (i, v) in c.iter().enumerate() {
                m[(i, j)] = *v;
            }
        }
        PricePanel::new(m, ids(cols.len()), (0..t).map(|i| i.to_string()).collect(), "1d").unwrap()
    }

    #[test]
    fn log_return_examples() {
        let g = compute_log_returns(&panel(&[&[100.0, 105.0]])).unwrap();
        assert!((g[(0, 0)] - 0.048_790_164_169_432).abs() < 1e-12);

        let g = compute_log_returns(&panel(&[&[7.0, 7.0, 7.0]])).unwrap();
        assert_eq!(g.column(0), vec![0.0, 0.0]);

        let e = std::f64::consts::E;
        let g = compute_log_returns(&panel(&[&[100.0, 100.0 * e, 100.0]])).unwrap();
        assert!((g[(0, 0)] - 1.0).abs() < 1e-14 && (g[(1, 0)] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn single_row_rejected() {
        assert!(compute_log_returns(&panel(&[&[1.0]])).is_err());
    }

    #[test]
    fn normalize_two_point_column() {
        let g = Matrix::from_rows(&[vec![1.0], vec![3.0]]).unwrap();
        let rp = normalize_returns(&g, &ids(1)).unwrap();
        assert_eq!(rp.per_asset_mean, vec![2.0]);
        assert_eq!(rp.per_asset_sigma, vec![1.0]);
        assert_eq!(rp.x.column(0), vec![-1.0, 1.0]);
    }

    #[test]
    fn zero_variance_names_asset() {
        let g = Matrix::from_rows(&[vec![1.0, 2.0], vec![1.0, 3.0]]).unwrap();
        match normalize_returns(&g, &["flat".into(), "ok".into()]) {
            Err(RmtError::ZeroVariance(id)) => assert_eq!(id, "flat"),
            other => panic!("unexpected {other:?}"),
        }
    }

    fn matrix_strategy() -> impl Strategy<Value = Matrix> {
        (2usize..40, 1usize..6).prop_flat_map(|(t, n)| {
            prop::collection::vec(-5.0f64..5.0, t * n).prop_map(move |d| Matrix::from_row_major(t, n, d).unwrap())
        })
    }

    proptest! {
        #[test]
        fn normalized_columns_meet_invariants(g in matrix_strategy()) {
            prop_assume!((0..g.cols()).all(|j| column_moments(&g, j).1 > 1e-6));
            let rp = normalize_returns(&g, &ids(g.cols())).unwrap();
            let t = g.rows() as f64;
            for j in 0..g.cols() {
                // independent recomputation
                let col = rp.x.column(j);
                let mean = col.iter().sum::<f64>() / t;
                let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / t;
                prop_assert!(mean.abs() < 1e-12 * t);
                prop_assert!((var - 1.0).abs() < 1e-10);
            }
        }

        #[test]
        fn normalization_is_idempotent(g in matrix_strategy()) {
            prop_assume!((0..g.cols()).all(|j| column_moments(&g, j).1 > 1e-6));
            let once = normalize_returns(&g, &ids(g.cols())).unwrap();
            let twice = normalize_returns(&once.x, &ids(g.cols())).unwrap();
            for (a, b) in once.x.as_slice().iter().zip(twice.x.as_slice()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn returns_ignore_price_scale(
            prices in prop::collection::vec(0.5f64..200.0, 2..30),
            k in 0.01f64..100.0,
        ) {
            let scaled: Vec<f64> = prices.iter().map(|p| p * k).collect();
            let a = compute_log_returns(&panel(&[&prices])).unwrap();
            let b = compute_log_returns(&panel(&[&scaled])).unwrap();
            for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
