//! Weighted event dataset: schema, CSV ingestion, weight normalization,
//! per-feature standardization, and seeded splits.
//!
//! The on-disk format is the Higgs-challenge CSV layout: an `EventId`
//! column, 30 named feature columns (13 `DER_*`, 17 `PRI_*`), a positive
//! `Weight`, and a `Label` in `{s, b}`. Cells holding exactly `-999.0`
//! mark undefined kinematics and are treated as missing; internally a
//! missing cell is stored as NaN and imputed with the training-split
//! median before any arithmetic.

use std::io::{Read, Write};

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng;

/// Sentinel the challenge files use for undefined feature cells.
pub const MISSING_SENTINEL: f64 = -999.0;

/// Feature grouping used by the feature-space partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum FeatureGroup {
    /// Low-level detector momenta/energies (`PRI_*`).
    Momentum,
    /// High-level quantities derived from the momenta (`DER_*`).
    Derived,
}

impl FeatureGroup {
    pub fn tag(self) -> &'static str {
        match self {
            FeatureGroup::Momentum => "momentum",
            FeatureGroup::Derived => "derived",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        match tag {
            "momentum" => Ok(FeatureGroup::Momentum),
            "derived" => Ok(FeatureGroup::Derived),
            other => Err(Error::Schema(format!("unknown feature group `{other}`"))),
        }
    }
}

/// The 13 derived feature names in file order.
pub const DERIVED_FEATURES: [&str; 13] = [
    "DER_mass_MMC",
    "DER_mass_transverse_met_lep",
    "DER_mass_vis",
    "DER_pt_h",
    "DER_deltaeta_jet_jet",
    "DER_mass_jet_jet",
    "DER_prodeta_jet_jet",
    "DER_deltar_tau_lep",
    "DER_pt_tot",
    "DER_sum_pt",
    "DER_pt_ratio_lep_tau",
    "DER_met_phi_centrality",
    "DER_lep_eta_centrality",
];

/// The 17 momentum feature names in file order.
pub const MOMENTUM_FEATURES: [&str; 17] = [
    "PRI_tau_pt",
    "PRI_tau_eta",
    "PRI_tau_phi",
    "PRI_lep_pt",
    "PRI_lep_eta",
    "PRI_lep_phi",
    "PRI_met",
    "PRI_met_phi",
    "PRI_met_sumet",
    "PRI_jet_num",
    "PRI_jet_leading_pt",
    "PRI_jet_leading_eta",
    "PRI_jet_leading_phi",
    "PRI_jet_subleading_pt",
    "PRI_jet_subleading_eta",
    "PRI_jet_subleading_phi",
    "PRI_jet_all_pt",
];

/// Ordered feature names plus the momentum/derived group assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSchema {
    names: Vec<String>,
    groups: Vec<FeatureGroup>,
}

impl FeatureSchema {
    /// The canonical 30-feature schema of the challenge files.
    pub fn higgs() -> Self {
        let mut names = Vec::with_capacity(30);
        let mut groups = Vec::with_capacity(30);
        for n in DERIVED_FEATURES {
            names.push(n.to_string());
            groups.push(FeatureGroup::Derived);
        }
        for n in MOMENTUM_FEATURES {
            names.push(n.to_string());
            groups.push(FeatureGroup::Momentum);
        }
        let schema = FeatureSchema { names, groups };
        schema.validate().expect("canonical schema is valid");
        schema
    }

    /// Builds a schema from name/group pairs, enforcing the invariants:
    /// exactly 30 features, 13 `DER_*` and 17 `PRI_*`, total grouping.
    pub fn new(names: Vec<String>, groups: Vec<FeatureGroup>) -> Result<Self> {
        let schema = FeatureSchema { names, groups };
        schema.validate()?;
        Ok(schema)
    }

    fn validate(&self) -> Result<()> {
        if self.names.len() != 30 || self.groups.len() != 30 {
            return Err(Error::Schema(format!(
                "expected 30 features, got {} names / {} groups",
                self.names.len(),
                self.groups.len()
            )));
        }
        let der = self.names.iter().filter(|n| n.starts_with("DER_")).count();
        let pri = self.names.iter().filter(|n| n.starts_with("PRI_")).count();
        if der != 13 || pri != 17 {
            return Err(Error::Schema(format!(
                "expected 13 DER_* and 17 PRI_* features, got {der} / {pri}"
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for n in &self.names {
            if !seen.insert(n.as_str()) {
                return Err(Error::Schema(format!("duplicate feature `{n}`")));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn groups(&self) -> &[FeatureGroup] {
        &self.groups
    }

    pub fn group_of(&self, index: usize) -> FeatureGroup {
        self.groups[index]
    }

    /// Indices of all features in `group`, in schema order.
    pub fn indices_in_group(&self, group: FeatureGroup) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.groups[i] == group).collect()
    }
}

/// Event class label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Label {
    Signal,
    Background,
}

impl Label {
    pub fn tag(self) -> &'static str {
        match self {
            Label::Signal => "s",
            Label::Background => "b",
        }
    }

    pub fn is_signal(self) -> bool {
        self == Label::Signal
    }
}

/// One collision event: feature vector, class label, positive weight.
///
/// Missing cells are stored as NaN; [`Event::is_missing`] tells them apart
/// from real values.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub id: u64,
    pub features: Vec<f64>,
    pub label: Label,
    pub weight: f64,
}

impl Event {
    pub fn is_missing(&self, feature: usize) -> bool {
        self.features[feature].is_nan()
    }
}

/// Ordered event collection plus the expected per-class totals that weight
/// normalization targets.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub schema: FeatureSchema,
    pub events: Vec<Event>,
    /// Expected signal count; equals the signal weight sum after parsing
    /// or the requested total after [`normalize_weights`].
    pub n_s_expected: f64,
    pub n_b_expected: f64,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn signal_count(&self) -> usize {
        self.events.iter().filter(|e| e.label.is_signal()).count()
    }

    pub fn weight_sum(&self, label: Label) -> f64 {
        self.events.iter().filter(|e| e.label == label).map(|e| e.weight).sum()
    }

    pub fn labels01(&self) -> Array1<f64> {
        Array1::from_iter(self.events.iter().map(|e| if e.label.is_signal() { 1.0 } else { 0.0 }))
    }

    pub fn weights(&self) -> Array1<f64> {
        Array1::from_iter(self.events.iter().map(|e| e.weight))
    }

    /// Raw feature matrix (missing cells as NaN), one row per event.
    pub fn feature_matrix(&self) -> Array2<f64> {
        let n = self.len();
        let d = self.schema.len();
        let mut m = Array2::zeros((n, d));
        for (i, e) in self.events.iter().enumerate() {
            for (j, &v) in e.features.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }
}

/// How file columns were matched to the schema; renders the
/// schema-validation report.
#[derive(Debug, Clone)]
pub struct ColumnMap {
    pub id_col: usize,
    pub weight_col: usize,
    pub label_col: usize,
    /// For each schema feature, the file column it was read from.
    pub feature_cols: Vec<(String, usize)>,
    /// Header columns not consumed by the schema.
    pub ignored: Vec<String>,
}

impl ColumnMap {
    pub fn report(&self) -> String {
        let mut out = String::from("schema validation report\n");
        out.push_str(&format!("EventId <- column {}\n", self.id_col));
        for (name, col) in &self.feature_cols {
            out.push_str(&format!("{name} <- column {col}\n"));
        }
        out.push_str(&format!("Weight <- column {}\n", self.weight_col));
        out.push_str(&format!("Label <- column {}\n", self.label_col));
        if !self.ignored.is_empty() {
            out.push_str(&format!("ignored columns: {}\n", self.ignored.join(", ")));
        }
        out
    }
}

fn find_column(headers: &[String], name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::Schema(format!("missing required column `{name}`")))
}

/// Parses challenge-format CSV text into a [`Dataset`].
///
/// Columns are matched by name, so file order may differ from schema
/// order. Cells equal to `-999.0` are flagged missing; any other
/// non-finite or non-numeric feature cell is rejected with its line
/// number.
pub fn parse_events<R: Read>(reader: R, schema: &FeatureSchema) -> Result<(Dataset, ColumnMap)> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers: Vec<String> =
        rdr.headers().map_err(csv_error)?.iter().map(|h| h.trim().to_string()).collect();

    let id_col = find_column(&headers, "EventId")?;
    let weight_col = find_column(&headers, "Weight")?;
    let label_col = find_column(&headers, "Label")?;
    let mut feature_cols = Vec::with_capacity(schema.len());
    for name in schema.names() {
        feature_cols.push((name.clone(), find_column(&headers, name)?));
    }
    let consumed: std::collections::HashSet<usize> = [id_col, weight_col, label_col]
        .into_iter()
        .chain(feature_cols.iter().map(|(_, c)| *c))
        .collect();
    let ignored = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| !consumed.contains(i))
        .map(|(_, h)| h.clone())
        .collect();
    let map = ColumnMap { id_col, weight_col, label_col, feature_cols, ignored };

    let mut events = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let cell = |col: usize| -> Result<&str> {
            record.get(col).ok_or_else(|| Error::Parse {
                line,
                msg: format!("row has {} cells, expected column {col}", record.len()),
            })
        };

        let id: u64 = cell(map.id_col)?.trim().parse().map_err(|_| Error::Parse {
            line,
            msg: format!("EventId `{}` is not an integer", cell(map.id_col).unwrap_or("")),
        })?;

        let mut features = Vec::with_capacity(schema.len());
        for (name, col) in &map.feature_cols {
            let raw = cell(*col)?.trim();
            let value: f64 = raw.parse().map_err(|_| Error::Parse {
                line,
                msg: format!("feature {name}: `{raw}` is not numeric"),
            })?;
            if value == MISSING_SENTINEL {
                features.push(f64::NAN);
            } else if !value.is_finite() {
                return Err(Error::Parse {
                    line,
                    msg: format!("feature {name}: `{raw}` is not a finite value"),
                });
            } else {
                features.push(value);
            }
        }

        let wraw = cell(map.weight_col)?.trim();
        let weight: f64 = wraw.parse().map_err(|_| Error::Parse {
            line,
            msg: format!("Weight `{wraw}` is not numeric"),
        })?;
        if !weight.is_finite() || weight <= 0.0 {
            return Err(Error::Parse { line, msg: format!("Weight must be positive, got `{wraw}`") });
        }

        let label = match cell(map.label_col)?.trim() {
            "s" => Label::Signal,
            "b" => Label::Background,
            other => {
                return Err(Error::Parse { line, msg: format!("Label `{other}` is not `s` or `b`") })
            }
        };

        events.push(Event { id, features, label, weight });
    }

    let mut ds =
        Dataset { schema: schema.clone(), events, n_s_expected: 0.0, n_b_expected: 0.0 };
    ds.n_s_expected = ds.weight_sum(Label::Signal);
    ds.n_b_expected = ds.weight_sum(Label::Background);
    Ok((ds, map))
}

fn csv_error(e: csv::Error) -> Error {
    let line = match e.position() {
        Some(p) => p.line(),
        None => 0,
    };
    Error::Parse { line, msg: e.to_string() }
}

/// Writes a dataset back out in the challenge CSV layout. Missing cells
/// become `-999.0`; finite cells use the shortest representation that
/// parses back to the identical value.
pub fn write_events<W: Write>(dataset: &Dataset, mut out: W) -> Result<()> {
    let mut header = String::from("EventId");
    for name in dataset.schema.names() {
        header.push(',');
        header.push_str(name);
    }
    header.push_str(",Weight,Label\n");
    out.write_all(header.as_bytes())?;
    let mut row = String::new();
    for e in &dataset.events {
        row.clear();
        row.push_str(&e.id.to_string());
        for &v in &e.features {
            row.push(',');
            if v.is_nan() {
                row.push_str("-999.0");
            } else {
                row.push_str(&format!("{v}"));
            }
        }
        row.push_str(&format!(",{},{}\n", e.weight, e.label.tag()));
        out.write_all(row.as_bytes())?;
    }
    Ok(())
}

/// Reassigns weights so each class is uniform and sums to its expected
/// count: signal events get `n_s/|S|`, background events `n_b/|B|`.
pub fn normalize_weights(dataset: &Dataset, n_s: f64, n_b: f64) -> Result<Dataset> {
    if !(n_s > 0.0) || !(n_b > 0.0) {
        return Err(Error::Config(format!(
            "expected counts must be positive, got n_s={n_s}, n_b={n_b}"
        )));
    }
    let ns_count = dataset.signal_count();
    let nb_count = dataset.len() - ns_count;
    if ns_count == 0 || nb_count == 0 {
        return Err(Error::Data(format!(
            "weight normalization needs both classes, got {ns_count} signal / {nb_count} background"
        )));
    }
    let ws = n_s / ns_count as f64;
    let wb = n_b / nb_count as f64;
    let mut out = dataset.clone();
    for e in &mut out.events {
        e.weight = if e.label.is_signal() { ws } else { wb };
    }
    out.n_s_expected = n_s;
    out.n_b_expected = n_b;
    Ok(out)
}

/// Per-feature imputation medians and standardization moments, fitted on
/// the training split only.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationStats {
    pub feature_names: Vec<String>,
    pub medians: Vec<f64>,
    pub means: Vec<f64>,
    /// Population standard deviations; constant features store 1.
    pub stds: Vec<f64>,
}

fn median_of_sorted(values: &[f64]) -> f64 {
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Fits medians on defined cells, then means and population stddevs after
/// median imputation. A feature with no defined cells is an error; a
/// constant feature stores stddev 1 so standardization maps it to zero.
pub fn fit_normalization(train: &Dataset) -> Result<NormalizationStats> {
    if train.is_empty() {
        return Err(Error::Data("cannot fit normalization on an empty dataset".into()));
    }
    let d = train.schema.len();
    let n = train.len() as f64;
    let mut medians = Vec::with_capacity(d);
    let mut means = Vec::with_capacity(d);
    let mut stds = Vec::with_capacity(d);
    let mut defined = Vec::new();
    for j in 0..d {
        defined.clear();
        defined.extend(train.events.iter().map(|e| e.features[j]).filter(|v| !v.is_nan()));
        if defined.is_empty() {
            return Err(Error::Data(format!(
                "feature {} has no defined cells in the training split",
                train.schema.names()[j]
            )));
        }
        defined.sort_by(f64::total_cmp);
        let median = median_of_sorted(&defined);

        let mut sum = 0.0;
        for e in &train.events {
            let v = e.features[j];
            sum += if v.is_nan() { median } else { v };
        }
        let mean = sum / n;
        let mut sq = 0.0;
        for e in &train.events {
            let v = e.features[j];
            let x = if v.is_nan() { median } else { v };
            sq += (x - mean) * (x - mean);
        }
        let var = sq / n;
        let std = var.sqrt();
        medians.push(median);
        means.push(mean);
        stds.push(if std == 0.0 { 1.0 } else { std });
    }
    Ok(NormalizationStats {
        feature_names: train.schema.names().to_vec(),
        medians,
        means,
        stds,
    })
}

/// One-shot standardization: impute missing cells with the stored median,
/// then z-score with the stored moments.
pub fn apply_normalization(dataset: &Dataset, stats: &NormalizationStats) -> Result<Dataset> {
    if stats.feature_names != dataset.schema.names() {
        return Err(Error::Schema(
            "normalization stats were fitted on a different schema".into(),
        ));
    }
    let mut out = dataset.clone();
    for e in &mut out.events {
        for j in 0..e.features.len() {
            let v = e.features[j];
            let x = if v.is_nan() { stats.medians[j] } else { v };
            e.features[j] = (x - stats.means[j]) / stats.stds[j];
        }
    }
    Ok(out)
}

/// Standardized feature matrix without materializing a second dataset.
pub fn normalized_matrix(dataset: &Dataset, stats: &NormalizationStats) -> Result<Array2<f64>> {
    if stats.feature_names != dataset.schema.names() {
        return Err(Error::Schema(
            "normalization stats were fitted on a different schema".into(),
        ));
    }
    let n = dataset.len();
    let d = dataset.schema.len();
    let mut m = Array2::zeros((n, d));
    for (i, e) in dataset.events.iter().enumerate() {
        for j in 0..d {
            let v = e.features[j];
            let x = if v.is_nan() { stats.medians[j] } else { v };
            m[(i, j)] = (x - stats.means[j]) / stats.stds[j];
        }
    }
    Ok(m)
}

/// Disjoint, exhaustive, seeded split. Events keep their original relative
/// order inside each part; the same seed always produces the same split.
pub fn split(dataset: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Config(format!(
            "train fraction must lie in (0,1), got {train_fraction}"
        )));
    }
    if dataset.is_empty() {
        return Err(Error::Data("cannot split an empty dataset".into()));
    }
    let n = dataset.len();
    let n_train = (train_fraction * n as f64).floor() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = rng::seeded(seed, rng::domain::SPLIT, 0);
    order.shuffle(&mut rng);
    let mut in_train = vec![false; n];
    for &i in order.iter().take(n_train) {
        in_train[i] = true;
    }
    let pick = |keep: bool| -> Dataset {
        let events: Vec<Event> = dataset
            .events
            .iter()
            .enumerate()
            .filter(|(i, _)| in_train[*i] == keep)
            .map(|(_, e)| e.clone())
            .collect();
        let mut ds = Dataset {
            schema: dataset.schema.clone(),
            events,
            n_s_expected: 0.0,
            n_b_expected: 0.0,
        };
        ds.n_s_expected = ds.weight_sum(Label::Signal);
        ds.n_b_expected = ds.weight_sum(Label::Background);
        ds
    };
    Ok((pick(true), pick(false)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_csv() -> String {
        let mut s = String::from("EventId");
        for name in FeatureSchema::higgs().names() {
            s.push(',');
            s.push_str(name);
        }
        s.push_str(",Weight,Label\n");
        s.push_str("100000");
        for _ in 0..30 {
            s.push_str(",1.0");
        }
        s.push_str(",2.0,s\n");
        s
    }

    #[test]
    fn schema_counts() {
        let schema = FeatureSchema::higgs();
        assert_eq!(schema.len(), 30);
        assert_eq!(schema.indices_in_group(FeatureGroup::Momentum).len(), 17);
        assert_eq!(schema.indices_in_group(FeatureGroup::Derived).len(), 13);
    }

    #[test]
    fn parse_single_row() {
        let schema = FeatureSchema::higgs();
        let (ds, map) = parse_events(tiny_csv().as_bytes(), &schema).unwrap();
        assert_eq!(ds.len(), 1);
        let e = &ds.events[0];
        assert_eq!(e.id, 100000);
        assert_eq!(e.weight, 2.0);
        assert_eq!(e.label, Label::Signal);
        assert!(e.features.iter().all(|&v| v == 1.0));
        assert!(map.report().contains("DER_mass_MMC <- column 1"));
    }

    #[test]
    fn parse_flags_sentinel_as_missing() {
        let schema = FeatureSchema::higgs();
        let mut csv = tiny_csv();
        csv = csv.replace("100000,1.0", "100000,-999.0");
        let (ds, _) = parse_events(csv.as_bytes(), &schema).unwrap();
        assert!(ds.events[0].is_missing(0));
        assert!(!ds.events[0].is_missing(1));
    }

    #[test]
    fn parse_matches_columns_by_name() {
        let schema = FeatureSchema::higgs();
        // Reversed feature order in the file.
        let mut header = String::from("EventId,Weight,Label");
        for name in schema.names().iter().rev() {
            header.push(',');
            header.push_str(name);
        }
        let mut row = String::from("7,1.5,b");
        for j in (0..30).rev() {
            row.push_str(&format!(",{}", j as f64));
        }
        let text = format!("{header}\n{row}\n");
        let (ds, _) = parse_events(text.as_bytes(), &schema).unwrap();
        for j in 0..30 {
            assert_eq!(ds.events[0].features[j], j as f64);
        }
    }

    #[test]
    fn parse_errors_name_the_problem() {
        let schema = FeatureSchema::higgs();
        let no_weight = tiny_csv().replace(",Weight,", ",Wt,");
        match parse_events(no_weight.as_bytes(), &schema) {
            Err(Error::Schema(msg)) => assert!(msg.contains("Weight")),
            other => panic!("expected schema error, got {other:?}"),
        }

        let bad_cell = tiny_csv().replace("100000,1.0", "100000,abc");
        match parse_events(bad_cell.as_bytes(), &schema) {
            Err(Error::Parse { line, msg }) => {
                assert_eq!(line, 2);
                assert!(msg.contains("DER_mass_MMC"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }

        let bad_label = tiny_csv().replace(",2.0,s", ",2.0,x");
        match parse_events(bad_label.as_bytes(), &schema) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn roundtrip_preserves_cells_bit_exactly() {
        let schema = FeatureSchema::higgs();
        let mut csv = tiny_csv();
        csv.push_str("100001");
        for j in 0..30 {
            if j == 4 {
                csv.push_str(",-999.0");
            } else {
                csv.push_str(&format!(",{}", (j as f64 + 0.1) * 0.3737));
            }
        }
        csv.push_str(",0.0018219529,b\n");
        let (ds, _) = parse_events(csv.as_bytes(), &schema).unwrap();
        let mut buf = Vec::new();
        write_events(&ds, &mut buf).unwrap();
        let (ds2, _) = parse_events(buf.as_slice(), &schema).unwrap();
        assert_eq!(ds.len(), ds2.len());
        for (a, b) in ds.events.iter().zip(&ds2.events) {
            assert_eq!(a.id, b.id);
            assert_eq!(a.weight.to_bits(), b.weight.to_bits());
            for (x, y) in a.features.iter().zip(&b.features) {
                if x.is_nan() {
                    assert!(y.is_nan());
                } else {
                    assert_eq!(x.to_bits(), y.to_bits());
                }
            }
        }
    }

    fn labelled(ns: usize, nb: usize) -> Dataset {
        let schema = FeatureSchema::higgs();
        let mut events = Vec::new();
        for i in 0..ns + nb {
            events.push(Event {
                id: i as u64,
                features: vec![i as f64; 30],
                label: if i < ns { Label::Signal } else { Label::Background },
                weight: 1.0 + i as f64,
            });
        }
        let mut ds = Dataset { schema, events, n_s_expected: 0.0, n_b_expected: 0.0 };
        ds.n_s_expected = ds.weight_sum(Label::Signal);
        ds.n_b_expected = ds.weight_sum(Label::Background);
        ds
    }

    #[test]
    fn normalize_weights_uniform() {
        let ds = labelled(4, 6);
        let out = normalize_weights(&ds, 2.0, 30.0).unwrap();
        for e in &out.events {
            if e.label.is_signal() {
                assert_eq!(e.weight, 0.5);
            } else {
                assert_eq!(e.weight, 5.0);
            }
        }

        let out = normalize_weights(&labelled(10, 10), 100.0, 1000.0).unwrap();
        assert!(out.events.iter().filter(|e| e.label.is_signal()).all(|e| e.weight == 10.0));
        assert!(out.events.iter().filter(|e| !e.label.is_signal()).all(|e| e.weight == 100.0));
        let s: f64 = out.weight_sum(Label::Signal);
        assert!((s - 100.0).abs() <= 1e-9 * 100.0);
    }

    #[test]
    fn normalize_weights_rejects_empty_class() {
        let ds = labelled(0, 5);
        assert!(matches!(normalize_weights(&ds, 1.0, 1.0), Err(Error::Data(_))));
    }

    fn column_dataset(cols: Vec<Vec<f64>>) -> Dataset {
        // cols[j][i]: value of feature j for event i; only the first
        // `cols.len()` features vary, the rest are zero.
        let schema = FeatureSchema::higgs();
        let n = cols[0].len();
        let mut events = Vec::new();
        for i in 0..n {
            let mut features = vec![0.0; 30];
            for (j, col) in cols.iter().enumerate() {
                features[j] = col[i];
            }
            events.push(Event {
                id: i as u64,
                features,
                label: if i % 2 == 0 { Label::Signal } else { Label::Background },
                weight: 1.0,
            });
        }
        Dataset { schema, events, n_s_expected: 1.0, n_b_expected: 1.0 }
    }

    #[test]
    fn fit_normalization_moments() {
        let ds = column_dataset(vec![vec![1.0, 2.0, 3.0]]);
        let stats = fit_normalization(&ds).unwrap();
        assert_eq!(stats.medians[0], 2.0);
        assert_eq!(stats.means[0], 2.0);
        let expect = ((1.0f64 + 0.0 + 1.0) / 3.0).sqrt();
        assert!((stats.stds[0] - expect).abs() < 1e-15);

        // Constant feature: stddev stored as 1.
        let ds = column_dataset(vec![vec![1.0, 1.0, 1.0]]);
        let stats = fit_normalization(&ds).unwrap();
        assert_eq!(stats.medians[0], 1.0);
        assert_eq!(stats.means[0], 1.0);
        assert_eq!(stats.stds[0], 1.0);
    }

    #[test]
    fn fit_normalization_imputes_before_moments() {
        let ds = column_dataset(vec![vec![1.0, f64::NAN, 3.0]]);
        let stats = fit_normalization(&ds).unwrap();
        assert_eq!(stats.medians[0], 2.0);
        assert_eq!(stats.means[0], 2.0);
        let expect = ((1.0f64 + 0.0 + 1.0) / 3.0).sqrt();
        assert!((stats.stds[0] - expect).abs() < 1e-15);
    }

    #[test]
    fn fit_normalization_rejects_all_missing_feature() {
        let ds = column_dataset(vec![vec![f64::NAN, f64::NAN]]);
        match fit_normalization(&ds) {
            Err(Error::Data(msg)) => assert!(msg.contains("DER_mass_MMC")),
            other => panic!("expected data error, got {other:?}"),
        }
    }

    #[test]
    fn apply_normalization_zscores_and_imputes() {
        let ds = column_dataset(vec![vec![1.0, 2.0, 3.0], vec![5.0, 5.0, 5.0]]);
        let stats = fit_normalization(&ds).unwrap();
        let out = apply_normalization(&ds, &stats).unwrap();
        // Cell equal to the mean maps to 0.
        assert_eq!(out.events[1].features[0], 0.0);
        // Constant feature maps to all zeros.
        assert!(out.events.iter().all(|e| e.features[1] == 0.0));

        let missing = column_dataset(vec![vec![1.0, f64::NAN, 3.0]]);
        let out = apply_normalization(&missing, &stats).unwrap();
        let expect = (stats.medians[0] - stats.means[0]) / stats.stds[0];
        assert_eq!(out.events[1].features[0], expect);
    }

    #[test]
    fn split_is_seeded_partition() {
        let ds = labelled(5, 5);
        let (a, b) = split(&ds, 0.8, 9).unwrap();
        assert_eq!(a.len(), 8);
        assert_eq!(b.len(), 2);
        let (a2, b2) = split(&ds, 0.8, 9).unwrap();
        let ids = |d: &Dataset| d.events.iter().map(|e| e.id).collect::<Vec<_>>();
        assert_eq!(ids(&a), ids(&a2));
        assert_eq!(ids(&b), ids(&b2));
        let mut all: Vec<u64> = ids(&a).into_iter().chain(ids(&b)).collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<u64>>());
        assert!(matches!(split(&ds, 1.0, 9), Err(Error::Config(_))));
    }
}
