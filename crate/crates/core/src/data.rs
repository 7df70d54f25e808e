//! Clustered dataset: outcomes in [0,1] and a dense-or-sparse design matrix,
//! grouped into independent clusters. Shared by every downstream module;
//! immutable after construction.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// One cluster at construction time: an opaque id and (y, x) rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub id: String,
    pub rows: Vec<(f64, Vec<f64>)>,
}

/// Column-compressed design storage. Dense and sparse columns iterate rows in
/// ascending order, so sums over either representation agree bit for bit
/// (skipped sparse zeros contribute nothing to an f64 sum).
#[derive(Debug, Clone, PartialEq)]
pub enum DesignMatrix {
    Dense {
        nrows: usize,
        ncols: usize,
        /// Column-major, length nrows * ncols.
        cols: Vec<f64>,
    },
    Sparse {
        nrows: usize,
        ncols: usize,
        indptr: Vec<usize>,
        rows: Vec<u32>,
        vals: Vec<f64>,
    },
}

impl DesignMatrix {
    pub fn nrows(&self) -> usize {
        match self {
            DesignMatrix::Dense { nrows, .. } | DesignMatrix::Sparse { nrows, .. } => *nrows,
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            DesignMatrix::Dense { ncols, .. } | DesignMatrix::Sparse { ncols, .. } => *ncols,
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> DesignMatrix {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        let mut cols = vec![0.0; nrows * ncols];
        for (i, row) in rows.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                cols[j * nrows + i] = *v;
            }
        }
        DesignMatrix::Dense { nrows, ncols, cols }
    }

    fn dense_col(&self, j: usize) -> Option<&[f64]> {
        match self {
            DesignMatrix::Dense { nrows, cols, .. } => Some(&cols[j * nrows..(j + 1) * nrows]),
            DesignMatrix::Sparse { .. } => None,
        }
    }

    /// Full-design view.
    pub fn all(&self) -> DesignRef<'_> {
        DesignRef { base: self, skip: None }
    }

    /// View with one column removed; remaining columns are reindexed to
    /// 0..p-1 skipping `col`.
    pub fn drop_col(&self, col: usize) -> DesignRef<'_> {
        debug_assert!(col < self.ncols());
        DesignRef { base: self, skip: Some(col) }
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        match self {
            DesignMatrix::Dense { nrows, cols, .. } => cols[j * nrows + i],
            DesignMatrix::Sparse { indptr, rows, vals, .. } => {
                let lo = indptr[j];
                let hi = indptr[j + 1];
                match rows[lo..hi].binary_search(&(i as u32)) {
                    Ok(pos) => vals[lo + pos],
                    Err(_) => 0.0,
                }
            }
        }
    }
}

/// Borrowed column view of a design, optionally excluding one column.
/// All per-column kernels live here so penalized solvers and restricted fits
/// run unchanged on full, reduced, dense, and sparse designs.
#[derive(Clone, Copy)]
pub struct DesignRef<'a> {
    base: &'a DesignMatrix,
    skip: Option<usize>,
}

impl<'a> DesignRef<'a> {
    pub fn nrows(&self) -> usize {
        self.base.nrows()
    }

    pub fn ncols(&self) -> usize {
        match self.skip {
            Some(_) => self.base.ncols() - 1,
            None => self.base.ncols(),
        }
    }

    /// Map a view column index back to the underlying design column.
    pub fn orig_col(&self, j: usize) -> usize {
        match self.skip {
            Some(k) if j >= k => j + 1,
            _ => j,
        }
    }

    #[inline]
    fn for_col<F: FnMut(usize, f64)>(&self, j: usize, mut f: F) {
        let j = self.orig_col(j);
        match self.base {
            DesignMatrix::Dense { nrows, cols, .. } => {
                for (i, v) in cols[j * nrows..(j + 1) * nrows].iter().enumerate() {
                    f(i, *v);
                }
            }
            DesignMatrix::Sparse { indptr, rows, vals, .. } => {
                for idx in indptr[j]..indptr[j + 1] {
                    f(rows[idx] as usize, vals[idx]);
                }
            }
        }
    }

    /// sum_i x_ij * v_i
    pub fn dot_col(&self, j: usize, v: &[f64]) -> f64 {
        if let Some(col) = self.base.dense_col(self.orig_col(j)) {
            let mut acc = 0.0;
            for (x, vi) in col.iter().zip(v) {
                acc += x * vi;
            }
            return acc;
        }
        let mut acc = 0.0;
        self.for_col(j, |i, x| acc += x * v[i]);
        acc
    }

    /// sum_i w_i * x_ij^2
    pub fn weighted_sq_col(&self, j: usize, w: &[f64]) -> f64 {
        let mut acc = 0.0;
        self.for_col(j, |i, x| acc += w[i] * x * x);
        acc
    }

    /// out_i += alpha * x_ij
    pub fn axpy_col(&self, j: usize, alpha: f64, out: &mut [f64]) {
        self.for_col(j, |i, x| out[i] += alpha * x);
    }

    /// out_i += alpha * s_i * x_ij
    pub fn axpy_scaled_col(&self, j: usize, alpha: f64, s: &[f64], out: &mut [f64]) {
        self.for_col(j, |i, x| out[i] += alpha * s[i] * x);
    }

    /// max_i |s_i * x_ij|
    pub fn max_abs_scaled(&self, j: usize, s: &[f64]) -> f64 {
        let mut m = 0.0f64;
        self.for_col(j, |i, x| m = m.max((s[i] * x).abs()));
        m
    }

    /// Materialize one column densely.
    pub fn col_dense(&self, j: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.nrows()];
        self.for_col(j, |i, x| out[i] = x);
        out
    }

    /// Linear predictor from sparse coefficient pairs (view indexing).
    pub fn predict(&self, pairs: &[(usize, f64)]) -> Vec<f64> {
        let mut out = vec![0.0; self.nrows()];
        for &(j, b) in pairs {
            if b != 0.0 {
                self.axpy_col(j, b, &mut out);
            }
        }
        out
    }

    /// (1/G) * sum_g ( sum_{i in g} v_i * x_ij )^2 over clusters of `ds`.
    pub fn cluster_sq_mean(&self, j: usize, v: &[f64], ds: &ClusteredDataset) -> f64 {
        let mut per_cluster = vec![0.0; ds.g()];
        self.for_col(j, |i, x| per_cluster[ds.row_cluster[i] as usize] += v[i] * x);
        per_cluster.iter().map(|s| s * s).sum::<f64>() / ds.g() as f64
    }
}

/// Outcomes, design, and cluster structure. Invariants (checked at
/// construction): G >= 1, every cluster nonempty, n = sum of cluster sizes,
/// all rows have p entries, every y in [0,1].
#[derive(Debug, Clone, PartialEq)]
pub struct ClusteredDataset {
    y: Vec<f64>,
    x: DesignMatrix,
    /// Cluster g spans rows offsets[g]..offsets[g+1]; length G+1.
    offsets: Vec<usize>,
    row_cluster: Vec<u32>,
    ids: Vec<String>,
    names: Option<Vec<String>>,
    intercept_col: Option<usize>,
}

impl ClusteredDataset {
    pub fn from_clusters(clusters: Vec<Cluster>) -> Result<ClusteredDataset> {
        if clusters.is_empty() {
            return Err(Error::Shape("dataset must contain at least one cluster".into()));
        }
        let p = clusters
            .iter()
            .flat_map(|c| c.rows.first())
            .map(|(_, x)| x.len())
            .next()
            .ok_or_else(|| Error::Shape("first cluster has no rows".into()))?;

        let mut y = Vec::new();
        let mut rows = Vec::new();
        let mut offsets = vec![0usize];
        let mut row_cluster = Vec::new();
        let mut ids = Vec::with_capacity(clusters.len());
        for (g, c) in clusters.into_iter().enumerate() {
            if c.rows.is_empty() {
                return Err(Error::Shape(format!("cluster '{}' is empty", c.id)));
            }
            for (yi, xi) in &c.rows {
                if xi.len() != p {
                    return Err(Error::Shape(format!(
                        "cluster '{}': row has {} covariates, expected {}",
                        c.id,
                        xi.len(),
                        p
                    )));
                }
                if !(0.0..=1.0).contains(yi) {
                    return Err(Error::Domain(format!(
                        "cluster '{}': outcome {} outside [0,1]",
                        c.id, yi
                    )));
                }
                y.push(*yi);
                row_cluster.push(g as u32);
            }
            rows.extend(c.rows.into_iter().map(|(_, x)| x));
            offsets.push(rows.len());
            ids.push(c.id);
        }
        let x = DesignMatrix::from_rows(&rows);
        Ok(ClusteredDataset {
            y,
            x,
            offsets,
            row_cluster,
            ids,
            names: None,
            intercept_col: None,
        })
    }

    /// Assemble from flat parts (used by the sparse loader and simulator).
    pub(crate) fn from_parts(
        y: Vec<f64>,
        x: DesignMatrix,
        offsets: Vec<usize>,
        ids: Vec<String>,
        names: Option<Vec<String>>,
        intercept_col: Option<usize>,
    ) -> Result<ClusteredDataset> {
        let n = y.len();
        if x.nrows() != n {
            return Err(Error::Shape(format!(
                "design has {} rows but {} outcomes given",
                x.nrows(),
                n
            )));
        }
        if offsets.first() != Some(&0) || offsets.last() != Some(&n) || offsets.len() < 2 {
            return Err(Error::Shape("bad cluster offsets".into()));
        }
        let mut row_cluster = vec![0u32; n];
        for g in 0..offsets.len() - 1 {
            if offsets[g + 1] <= offsets[g] {
                return Err(Error::Shape(format!("cluster {g} is empty")));
            }
            for r in offsets[g]..offsets[g + 1] {
                row_cluster[r] = g as u32;
            }
        }
        for yi in &y {
            if !(0.0..=1.0).contains(yi) {
                return Err(Error::Domain(format!("outcome {yi} outside [0,1]")));
            }
        }
        if ids.len() != offsets.len() - 1 {
            return Err(Error::Shape("cluster id count does not match offsets".into()));
        }
        Ok(ClusteredDataset {
            y,
            x,
            offsets,
            row_cluster,
            ids,
            names,
            intercept_col,
        })
    }

    /// Total observations n.
    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Covariate dimension p.
    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Number of clusters G.
    pub fn g(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn design(&self) -> &DesignMatrix {
        &self.x
    }

    pub fn cluster_rows(&self, g: usize) -> std::ops::Range<usize> {
        self.offsets[g]..self.offsets[g + 1]
    }

    pub fn cluster_size(&self, g: usize) -> usize {
        self.offsets[g + 1] - self.offsets[g]
    }

    pub fn cluster_id(&self, g: usize) -> &str {
        &self.ids[g]
    }

    /// Row index -> cluster index map.
    pub fn row_cluster(&self) -> &[u32] {
        &self.row_cluster
    }

    pub fn column_names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    pub fn intercept_col(&self) -> Option<usize> {
        self.intercept_col
    }

    pub fn set_intercept_col(&mut self, col: Option<usize>) {
        self.intercept_col = col;
    }

    /// Resolve a target given by name or decimal index to a column index.
    pub fn resolve_column(&self, target: &str) -> Result<usize> {
        if let Some(names) = &self.names {
            if let Some(idx) = names.iter().position(|n| n == target) {
                return Ok(idx);
            }
        }
        if let Ok(idx) = target.parse::<usize>() {
            if idx < self.p() {
                return Ok(idx);
            }
            return Err(Error::Domain(format!(
                "column index {idx} out of range (p = {})",
                self.p()
            )));
        }
        let available = match &self.names {
            Some(names) => names.join(", "),
            None => format!("indices 0..{}", self.p()),
        };
        Err(Error::Domain(format!(
            "unknown column '{target}'; available: {available}"
        )))
    }

    /// Aggregate per-observation values into per-cluster sums.
    pub fn cluster_sums(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.g()];
        for (i, vi) in v.iter().enumerate() {
            out[self.row_cluster[i] as usize] += vi;
        }
        out
    }
}

/// Column names for the long CSV format.
#[derive(Debug, Clone)]
pub struct CsvSchema {
    pub cluster_col: String,
    pub outcome_col: String,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema {
            cluster_col: "cluster".into(),
            outcome_col: "y".into(),
        }
    }
}

/// Load the long CSV format: one row per observation, a cluster-id column, an
/// outcome column in [0,1], and every remaining column a covariate (header
/// order). Cluster order is first appearance; within-cluster row order is
/// file order.
pub fn load_long_csv(path: &Path, schema: &CsvSchema) -> Result<ClusteredDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse { line: 1, message: e.to_string() })?
        .clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse {
                line: 1,
                message: format!("header is missing column '{name}'"),
            })
    };
    let cluster_idx = find(&schema.cluster_col)?;
    let y_idx = find(&schema.outcome_col)?;
    let covariate_idx: Vec<usize> = (0..headers.len())
        .filter(|i| *i != cluster_idx && *i != y_idx)
        .collect();
    if covariate_idx.is_empty() {
        return Err(Error::Parse {
            line: 1,
            message: "no covariate columns in header".into(),
        });
    }
    let names: Vec<String> = covariate_idx.iter().map(|&i| headers[i].to_string()).collect();

    let mut order: Vec<String> = Vec::new();
    let mut grouped: HashMap<String, Vec<(f64, Vec<f64>)>> = HashMap::new();
    for (rec_no, record) in reader.records().enumerate() {
        let line = rec_no + 2; // 1-based, after the header
        let record = record.map_err(|e| match e.kind() {
            csv::ErrorKind::UnequalLengths { .. } => Error::Shape(format!(
                "ragged row at line {line}: {e}"
            )),
            _ => Error::Parse { line, message: e.to_string() },
        })?;
        let id = record.get(cluster_idx).unwrap_or("").to_string();
        let y_raw = record.get(y_idx).unwrap_or("");
        let y: f64 = y_raw.parse().map_err(|_| Error::Parse {
            line,
            message: format!("outcome '{y_raw}' is not a number"),
        })?;
        if !(0.0..=1.0).contains(&y) {
            return Err(Error::Domain(format!(
                "line {line}: outcome {y} outside [0,1]"
            )));
        }
        let mut xs = Vec::with_capacity(covariate_idx.len());
        for &ci in &covariate_idx {
            let raw = record.get(ci).unwrap_or("");
            let v: f64 = raw.parse().map_err(|_| Error::Parse {
                line,
                message: format!("covariate '{}' value '{raw}' is not a number", &headers[ci]),
            })?;
            xs.push(v);
        }
        if !grouped.contains_key(&id) {
            order.push(id.clone());
        }
        grouped.entry(id).or_default().push((y, xs));
    }

    let clusters: Vec<Cluster> = order
        .into_iter()
        .map(|id| {
            let rows = grouped.remove(&id).unwrap();
            Cluster { id, rows }
        })
        .collect();
    let mut ds = ClusteredDataset::from_clusters(clusters)?;
    ds.names = Some(names);
    Ok(ds)
}

/// Write the long CSV format (inverse of `load_long_csv`). Floats are
/// printed with the shortest round-trip representation.
pub fn write_long_csv(ds: &ClusteredDataset, path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    let names: Vec<String> = match ds.column_names() {
        Some(ns) => ns.to_vec(),
        None => (1..=ds.p()).map(|j| format!("x{j}")).collect(),
    };
    writeln!(out, "cluster,y,{}", names.join(","))?;
    for g in 0..ds.g() {
        for i in ds.cluster_rows(g) {
            write!(out, "{},{}", ds.cluster_id(g), ds.y[i])?;
            for j in 0..ds.p() {
                write!(out, ",{}", ds.design().entry(i, j))?;
            }
            writeln!(out)?;
        }
    }
    Ok(())
}

/// Options for the sparse triplet loader.
#[derive(Debug, Clone)]
pub struct SparseOptions {
    /// Declared covariate dimension (excluding any prepended intercept).
    pub p: usize,
    /// Prepend an all-ones intercept column at index 0.
    pub intercept: bool,
}

/// Load a sparse document-term design. `rows_path` holds `doc,col,value`
/// triplets; `labels_path` holds `doc,cluster,y` with one line per document.
/// Unspecified cells are zero. Document order and cluster order come from the
/// labels file (first appearance).
pub fn load_sparse_triplets(
    rows_path: &Path,
    labels_path: &Path,
    opts: &SparseOptions,
) -> Result<ClusteredDataset> {
    // Labels: doc -> (cluster, y), in file order.
    let labels_raw = std::fs::read_to_string(labels_path)?;
    let mut doc_order: Vec<u64> = Vec::new();
    let mut doc_info: HashMap<u64, (String, f64)> = HashMap::new();
    for (line_no, line) in labels_raw.lines().enumerate() {
        let line_no = line_no + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 3 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("labels line must be 'doc,cluster,y', got '{line}'"),
            });
        }
        let doc: u64 = parts[0].trim().parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("bad doc index '{}'", parts[0]),
        })?;
        let y: f64 = parts[2].trim().parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("bad outcome '{}'", parts[2]),
        })?;
        if !(0.0..=1.0).contains(&y) {
            return Err(Error::Domain(format!(
                "labels line {line_no}: outcome {y} outside [0,1]"
            )));
        }
        if doc_info.insert(doc, (parts[1].trim().to_string(), y)).is_some() {
            return Err(Error::Conflict(format!(
                "labels line {line_no}: doc {doc} listed twice"
            )));
        }
        doc_order.push(doc);
    }
    if doc_order.is_empty() {
        return Err(Error::Shape("labels file has no documents".into()));
    }

    // Group documents by cluster (first appearance), preserving doc order.
    let mut cluster_order: Vec<String> = Vec::new();
    let mut cluster_docs: HashMap<String, Vec<u64>> = HashMap::new();
    for &doc in &doc_order {
        let (cid, _) = &doc_info[&doc];
        if !cluster_docs.contains_key(cid) {
            cluster_order.push(cid.clone());
        }
        cluster_docs.entry(cid.clone()).or_default().push(doc);
    }
    let mut doc_row: HashMap<u64, usize> = HashMap::new();
    let mut y = Vec::with_capacity(doc_order.len());
    let mut offsets = vec![0usize];
    for cid in &cluster_order {
        for &doc in &cluster_docs[cid] {
            doc_row.insert(doc, y.len());
            y.push(doc_info[&doc].1);
        }
        offsets.push(y.len());
    }
    let n = y.len();

    // Triplets.
    let triplets_raw = std::fs::read_to_string(rows_path)?;
    let shift = usize::from(opts.intercept);
    let ncols = opts.p + shift;
    let mut entries: Vec<(u32, u32, f64)> = Vec::new();
    for (line_no, line) in triplets_raw.lines().enumerate() {
        let line_no = line_no + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 3 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("triplet line must be 'doc,col,value', got '{line}'"),
            });
        }
        let doc: u64 = parts[0].trim().parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("bad doc index '{}'", parts[0]),
        })?;
        let col: usize = parts[1].trim().parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("bad column index '{}'", parts[1]),
        })?;
        let value: f64 = parts[2].trim().parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("bad value '{}'", parts[2]),
        })?;
        if col >= opts.p {
            return Err(Error::Domain(format!(
                "triplet line {line_no}: column {col} >= declared p = {}",
                opts.p
            )));
        }
        let row = *doc_row.get(&doc).ok_or_else(|| {
            Error::Consistency(format!(
                "triplet line {line_no}: doc {doc} not present in labels file"
            ))
        })?;
        entries.push(((col + shift) as u32, row as u32, value));
    }

    // Intercept entries, then CSC assembly; duplicate (doc, col) pairs are a
    // conflict.
    if opts.intercept {
        for row in 0..n {
            entries.push((0, row as u32, 1.0));
        }
    }
    entries.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    for w in entries.windows(2) {
        if w[0].0 == w[1].0 && w[0].1 == w[1].1 {
            return Err(Error::Conflict(format!(
                "duplicate triplet for doc row {}, column {}",
                w[0].1,
                w[0].0 as usize - shift
            )));
        }
    }
    let mut indptr = vec![0usize; ncols + 1];
    for &(c, _, _) in &entries {
        indptr[c as usize + 1] += 1;
    }
    for c in 0..ncols {
        indptr[c + 1] += indptr[c];
    }
    let rows: Vec<u32> = entries.iter().map(|e| e.1).collect();
    let vals: Vec<f64> = entries.iter().map(|e| e.2).collect();
    let x = DesignMatrix::Sparse { nrows: n, ncols, indptr, rows, vals };
    ClusteredDataset::from_parts(
        y,
        x,
        offsets,
        cluster_order,
        None,
        opts.intercept.then_some(0),
    )
}

/// Diagnostics reported by `validate`.
#[derive(Debug, Clone, PartialEq)]
pub enum Finding {
    /// Column takes a single value over the whole design (zero variance).
    ConstantColumn { col: usize, value: f64 },
    /// All outcomes equal 0 or all equal 1: perfect-separation risk.
    DegenerateOutcome { value: f64 },
    /// Cluster size exceeds the configured bound.
    OversizedCluster { id: String, size: usize, bound: usize },
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Finding::ConstantColumn { col, value } => {
                write!(f, "constant column {col} (all entries = {value})")
            }
            Finding::DegenerateOutcome { value } => {
                write!(f, "degenerate outcome: every y = {value}")
            }
            Finding::OversizedCluster { id, size, bound } => {
                write!(f, "cluster '{id}' has {size} rows (> bound {bound})")
            }
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ValidateOptions {
    pub max_cluster_size: Option<usize>,
}

/// Diagnostics only; never mutates the dataset. A declared intercept column
/// is exempt from the constant-column check.
pub fn validate(ds: &ClusteredDataset, opts: &ValidateOptions) -> Vec<Finding> {
    let mut findings = Vec::new();
    let design = ds.design().all();
    for j in 0..ds.p() {
        if Some(j) == ds.intercept_col() {
            continue;
        }
        let col = design.col_dense(j);
        let first = col[0];
        if col.iter().all(|v| *v == first) {
            findings.push(Finding::ConstantColumn { col: j, value: first });
        }
    }
    let y0 = ds.y()[0];
    if (y0 == 0.0 || y0 == 1.0) && ds.y().iter().all(|v| *v == y0) {
        findings.push(Finding::DegenerateOutcome { value: y0 });
    }
    if let Some(bound) = opts.max_cluster_size {
        for g in 0..ds.g() {
            let size = ds.cluster_size(g);
            if size > bound {
                findings.push(Finding::OversizedCluster {
                    id: ds.cluster_id(g).to_string(),
                    size,
                    bound,
                });
            }
        }
    }
    findings
}
