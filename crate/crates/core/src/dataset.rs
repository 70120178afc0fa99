//! Accident CSV ingestion and cleansing.
//!
//! [`parse_dataset`] reads delimiter-separated text into a [`RawDataset`],
//! matching header names to a [`Schema`] case- and accent-insensitively.
//! [`cleanse`] turns the raw text cells into typed columns, dropping records
//! whose date/time or count cells do not parse and removing every excluded
//! column (identifiers, leakage attributes, geospatial attributes).

use std::collections::HashMap;
use std::io::Read;

use chrono::{NaiveDate, NaiveDateTime, NaiveTime};
use log::warn;
use serde::{Deserialize, Serialize};
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

/// Category label given to empty categorical cells.
pub const MISSING_CATEGORY: &str = "(missing)";

/// Maximum fraction of rows cleansing may drop before the input is rejected.
pub const MAX_DROP_FRACTION: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Count,
    Categorical,
    BinaryFlag,
    Datetime,
    Casualty,
    ExcludedId,
    ExcludedLeak,
    ExcludedGeo,
}

impl ColumnKind {
    pub fn is_excluded(self) -> bool {
        matches!(
            self,
            ColumnKind::ExcludedId | ColumnKind::ExcludedLeak | ColumnKind::ExcludedGeo
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    /// Alternative spellings accepted in a header, e.g. `REGION` for `REGIAO`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub aliases: Vec<String>,
}

impl ColumnSpec {
    pub fn new(name: impl Into<String>, kind: ColumnKind) -> Self {
        ColumnSpec {
            name: name.into(),
            kind,
            aliases: Vec::new(),
        }
    }

    pub fn with_alias(mut self, alias: impl Into<String>) -> Self {
        self.aliases.push(alias.into());
        self
    }

    fn matches(&self, normalized_header: &str) -> bool {
        normalize_name(&self.name) == normalized_header
            || self.aliases.iter().any(|a| normalize_name(a) == normalized_header)
    }
}

/// Upper-cases and strips diacritics so `Região`, `REGIAO` and `regiao`
/// compare equal.
pub fn normalize_name(name: &str) -> String {
    name.trim()
        .nfd()
        .filter(|c| !is_combining_mark(*c))
        .collect::<String>()
        .to_uppercase()
}

/// Column layout plus the parsing rules applied to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub columns: Vec<ColumnSpec>,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    /// `chrono` date formats tried in order for the date part of a
    /// datetime cell. The time part is parsed leniently.
    #[serde(default = "default_date_formats")]
    pub date_formats: Vec<String>,
}

fn default_delimiter() -> char {
    ';'
}

fn default_date_formats() -> Vec<String> {
    vec!["%Y-%m-%d".to_string()]
}

pub const DEFAULT_DATETIME_COLUMN: &str = "DATA_HORA";

pub const COUNT_COLUMNS: [&str; 10] = [
    "AUTO",
    "TAXI",
    "LOTACAO",
    "ONIBUS_URB",
    "ONIBUS_MET",
    "CAMINHAO",
    "MOTO",
    "CARROCA",
    "BICICLETA",
    "OUTRO",
];

pub const CATEGORICAL_COLUMNS: [&str; 9] = [
    "LOCAL",
    "TIPO_ACID",
    "DIA_SEM",
    "CONSORCIO",
    "TEMPO",
    "NOITE_DIA",
    "MES",
    "FX_HORA",
    "CORREDOR",
];

pub const CASUALTY_COLUMNS: [&str; 5] = ["FERIDOS", "FERIDOS_GR", "MORTES", "MORTES_POST", "FATAIS"];

pub const ID_COLUMNS: [&str; 2] = ["ID", "BOLETIM"];

pub const LEAK_COLUMNS: [&str; 2] = ["FONTE", "UPS"];

pub const GEO_COLUMNS: [&str; 7] = [
    "LOG1",
    "LOG2",
    "PREDIAL1",
    "LATITUDE",
    "LONGITUDE",
    "LOCAL_VIA",
    "REGIAO",
];

impl Default for Schema {
    fn default() -> Self {
        Schema::accidents_2013(DEFAULT_DATETIME_COLUMN)
    }
}

impl Schema {
    /// The 2013 Porto Alegre accident layout with the given datetime column.
    pub fn accidents_2013(datetime_column: &str) -> Self {
        let mut columns = Vec::new();
        columns.extend(COUNT_COLUMNS.iter().map(|n| ColumnSpec::new(*n, ColumnKind::Count)));
        columns.extend(
            CATEGORICAL_COLUMNS
                .iter()
                .map(|n| ColumnSpec::new(*n, ColumnKind::Categorical)),
        );
        columns.push(ColumnSpec::new(datetime_column, ColumnKind::Datetime));
        for name in CASUALTY_COLUMNS {
            let spec = ColumnSpec::new(name, ColumnKind::Casualty);
            // Datapoa files spell this one without the plural.
            let spec = if name == "MORTES_POST" {
                spec.with_alias("MORTE_POST")
            } else {
                spec
            };
            columns.push(spec);
        }
        columns.extend(ID_COLUMNS.iter().map(|n| ColumnSpec::new(*n, ColumnKind::ExcludedId)));
        columns.extend(
            LEAK_COLUMNS
                .iter()
                .map(|n| ColumnSpec::new(*n, ColumnKind::ExcludedLeak)),
        );
        for name in GEO_COLUMNS {
            let spec = ColumnSpec::new(name, ColumnKind::ExcludedGeo);
            let spec = if name == "REGIAO" {
                spec.with_alias("REGION")
            } else {
                spec
            };
            columns.push(spec);
        }
        Schema {
            columns,
            delimiter: default_delimiter(),
            date_formats: default_date_formats(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashMap::new();
        for spec in &self.columns {
            if let Some(prev) = seen.insert(normalize_name(&spec.name), spec.kind) {
                return Err(Error::Validation(format!(
                    "column {} declared twice (as {:?} and {:?})",
                    spec.name, prev, spec.kind
                )));
            }
        }
        if !self.delimiter.is_ascii() {
            return Err(Error::Validation("delimiter must be an ASCII character".into()));
        }
        if self.columns.iter().filter(|c| c.kind == ColumnKind::Casualty).count() == 0 {
            return Err(Error::Validation("schema has no casualty columns".into()));
        }
        Ok(())
    }

    /// Columns that must appear in every input file.
    pub fn required(&self) -> impl Iterator<Item = &ColumnSpec> {
        self.columns.iter().filter(|c| !c.kind.is_excluded())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawDataset {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub source_uri: String,
    /// Header position of each schema column, parallel to `Schema::columns`.
    pub column_positions: Vec<Option<usize>>,
    /// Header names not matched by any schema column; carried through as
    /// excluded pass-through columns.
    pub unknown_columns: Vec<String>,
}

impl RawDataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

fn decode_text(bytes: &[u8]) -> String {
    let text = match std::str::from_utf8(bytes) {
        Ok(s) => s.to_string(),
        // Latin-1 maps every byte to the code point of the same value.
        Err(_) => bytes.iter().map(|&b| b as char).collect(),
    };
    match text.strip_prefix('\u{feff}') {
        Some(stripped) => stripped.to_string(),
        None => text,
    }
}

/// Reads a delimiter-separated accident file with a header row.
pub fn parse_dataset<R: Read>(mut source: R, schema: &Schema, source_uri: &str) -> Result<RawDataset> {
    schema.validate()?;
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    let text = decode_text(&bytes);

    let mut reader = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter as u8)
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());

    let header: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let normalized: Vec<String> = header.iter().map(|h| normalize_name(h)).collect();

    let mut column_positions = Vec::with_capacity(schema.columns.len());
    let mut claimed = vec![false; header.len()];
    for spec in &schema.columns {
        let pos = normalized
            .iter()
            .enumerate()
            .position(|(i, h)| !claimed[i] && spec.matches(h));
        if let Some(p) = pos {
            claimed[p] = true;
        } else if !spec.kind.is_excluded() {
            return Err(Error::MissingColumn(spec.name.clone()));
        }
        column_positions.push(pos);
    }
    let unknown_columns: Vec<String> = header
        .iter()
        .zip(&claimed)
        .filter(|(_, c)| !**c)
        .map(|(h, _)| h.clone())
        .collect();
    if !unknown_columns.is_empty() {
        warn!(
            "ignoring {} column(s) not in the schema: {}",
            unknown_columns.len(),
            unknown_columns.join(", ")
        );
    }

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        // A trailing blank line comes through as a single empty field.
        if record.len() == 1 && record[0].trim().is_empty() {
            continue;
        }
        if record.len() != header.len() {
            return Err(Error::Parse {
                row: line,
                message: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        rows.push(record.iter().map(|c| c.trim().to_string()).collect());
    }

    Ok(RawDataset {
        header,
        rows,
        source_uri: source_uri.to_string(),
        column_positions,
        unknown_columns,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanseLog {
    pub dropped_row_indices: Vec<usize>,
    pub reasons: Vec<String>,
}

impl CleanseLog {
    fn push(&mut self, row: usize, reason: String) {
        self.dropped_row_indices.push(row);
        self.reasons.push(reason);
    }

    pub fn len(&self) -> usize {
        self.dropped_row_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dropped_row_indices.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ColumnData {
    /// Counts, casualty counts and 0/1 flags.
    Count {
        values: Vec<u32>,
    },
    /// Interned category codes; `levels[code]` is the category text.
    Categorical {
        codes: Vec<u32>,
        levels: Vec<String>,
    },
    Datetime {
        values: Vec<NaiveDateTime>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanColumn {
    pub spec: ColumnSpec,
    pub data: ColumnData,
}

/// Typed, validated records. Excluded columns have been removed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanDataset {
    pub columns: Vec<CleanColumn>,
    /// Index into the raw rows of each retained row.
    pub source_rows: Vec<usize>,
    pub dropped: CleanseLog,
}

impl CleanDataset {
    pub fn n_rows(&self) -> usize {
        self.source_rows.len()
    }

    pub fn schema(&self) -> Vec<ColumnSpec> {
        self.columns.iter().map(|c| c.spec.clone()).collect()
    }

    pub fn column(&self, name: &str) -> Option<&CleanColumn> {
        let key = normalize_name(name);
        self.columns.iter().find(|c| c.spec.matches(&key))
    }

    pub fn columns_of(&self, kind: ColumnKind) -> impl Iterator<Item = &CleanColumn> {
        self.columns.iter().filter(move |c| c.spec.kind == kind)
    }

    /// Casualty counts per row, in schema order.
    pub fn casualty_counts(&self) -> Vec<Vec<u32>> {
        let cols: Vec<&Vec<u32>> = self
            .columns_of(ColumnKind::Casualty)
            .filter_map(|c| match &c.data {
                ColumnData::Count { values } => Some(values),
                _ => None,
            })
            .collect();
        (0..self.n_rows())
            .map(|r| cols.iter().map(|c| c[r]).collect())
            .collect()
    }
}

/// Parses the time part of a datetime cell: `H`, `H:MM`, `H:MM:SS` or
/// `H:MM:SS.fff`; an absent time means midnight.
fn parse_lenient_time(text: &str) -> Option<NaiveTime> {
    let text = text.trim();
    if text.is_empty() {
        return NaiveTime::from_hms_opt(0, 0, 0);
    }
    let mut parts = text.split(':');
    let hour: u32 = parts.next()?.trim().parse().ok()?;
    let minute: u32 = match parts.next() {
        Some(m) => m.trim().parse().ok()?,
        None => 0,
    };
    let second: u32 = match parts.next() {
        Some(s) => {
            let whole = s.split('.').next()?;
            whole.trim().parse().ok()?
        }
        None => 0,
    };
    if parts.next().is_some() {
        return None;
    }
    NaiveTime::from_hms_opt(hour, minute, second)
}

pub fn parse_datetime(cell: &str, date_formats: &[String]) -> Option<NaiveDateTime> {
    let cell = cell.trim();
    let (date_part, time_part) = match cell.find([' ', 'T']) {
        Some(i) => (&cell[..i], &cell[i + 1..]),
        None => (cell, ""),
    };
    let date = date_formats
        .iter()
        .find_map(|f| NaiveDate::parse_from_str(date_part, f).ok())?;
    let time = parse_lenient_time(time_part)?;
    Some(date.and_time(time))
}

/// Validates and types the raw rows, dropping records with unparseable
/// datetime or count cells.
pub fn cleanse(raw: &RawDataset, schema: &Schema) -> Result<CleanDataset> {
    if raw.column_positions.len() != schema.columns.len() {
        return Err(Error::DimensionMismatch {
            expected: schema.columns.len(),
            actual: raw.column_positions.len(),
        });
    }
    let kept: Vec<(&ColumnSpec, usize)> = schema
        .columns
        .iter()
        .zip(&raw.column_positions)
        .filter(|(spec, _)| !spec.kind.is_excluded())
        .map(|(spec, pos)| {
            pos.map(|p| (spec, p))
                .ok_or_else(|| Error::MissingColumn(spec.name.clone()))
        })
        .collect::<Result<_>>()?;

    let mut log = CleanseLog::default();
    let mut source_rows = Vec::with_capacity(raw.rows.len());
    for (row_idx, row) in raw.rows.iter().enumerate() {
        match validate_row(row, &kept, schema) {
            Ok(()) => source_rows.push(row_idx),
            Err(reason) => log.push(row_idx, reason),
        }
    }

    let total = raw.rows.len();
    if total > 0 && (log.len() as f64) > MAX_DROP_FRACTION * total as f64 {
        return Err(Error::ExcessiveDrops {
            dropped: log.len(),
            total,
        });
    }
    for (row, reason) in log.dropped_row_indices.iter().zip(&log.reasons) {
        warn!("dropped raw row {row}: {reason}");
    }

    let columns = kept
        .iter()
        .map(|&(spec, pos)| {
            let cells = source_rows.iter().map(|&r| raw.rows[r][pos].as_str());
            let data = match spec.kind {
                ColumnKind::Count | ColumnKind::Casualty | ColumnKind::BinaryFlag => ColumnData::Count {
                    values: cells.map(|c| c.parse().expect("validated count")).collect(),
                },
                ColumnKind::Datetime => ColumnData::Datetime {
                    values: cells
                        .map(|c| parse_datetime(c, &schema.date_formats).expect("validated datetime"))
                        .collect(),
                },
                ColumnKind::Categorical => intern(cells),
                _ => unreachable!("excluded columns filtered above"),
            };
            CleanColumn {
                spec: spec.clone(),
                data,
            }
        })
        .collect();

    Ok(CleanDataset {
        columns,
        source_rows,
        dropped: log,
    })
}

fn validate_row(row: &[String], kept: &[(&ColumnSpec, usize)], schema: &Schema) -> std::result::Result<(), String> {
    for &(spec, pos) in kept {
        let cell = row[pos].as_str();
        match spec.kind {
            ColumnKind::Datetime => {
                if parse_datetime(cell, &schema.date_formats).is_none() {
                    return Err(format!("invalid date/time in {}: {:?}", spec.name, cell));
                }
            }
            ColumnKind::Count | ColumnKind::Casualty => {
                if cell.parse::<u32>().is_err() {
                    return Err(format!("invalid count in {}: {:?}", spec.name, cell));
                }
            }
            ColumnKind::BinaryFlag if !matches!(cell, "0" | "1") => {
                return Err(format!("invalid flag in {}: {:?}", spec.name, cell));
            }
            _ => {}
        }
    }
    Ok(())
}

fn intern<'a>(cells: impl Iterator<Item = &'a str>) -> ColumnData {
    let mut levels: Vec<String> = Vec::new();
    let mut lookup: HashMap<&'a str, u32> = HashMap::new();
    let codes = cells
        .map(|c| {
            let key = if c.is_empty() { MISSING_CATEGORY } else { c };
            *lookup.entry(key).or_insert_with(|| {
                levels.push(key.to_string());
                (levels.len() - 1) as u32
            })
        })
        .collect();
    ColumnData::Categorical { codes, levels }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn header_line() -> String {
        let schema = Schema::default();
        schema
            .columns
            .iter()
            .map(|c| c.name.clone())
            .collect::<Vec<_>>()
            .join(";")
    }

    fn row(datetime: &str, moto: &str, tipo: &str) -> String {
        Schema::default()
            .columns
            .iter()
            .map(|c| match c.name.as_str() {
                "DATA_HORA" => datetime.to_string(),
                "MOTO" => moto.to_string(),
                "TIPO_ACID" => tipo.to_string(),
                "FONTE" => "EPTC".to_string(),
                "UPS" => "1".to_string(),
                "ID" | "BOLETIM" => "7".to_string(),
                _ if c.kind == ColumnKind::Count || c.kind == ColumnKind::Casualty => "0".into(),
                _ => "X".to_string(),
            })
            .collect::<Vec<_>>()
            .join(";")
    }

    fn parse(text: &str) -> Result<RawDataset> {
        parse_dataset(text.as_bytes(), &Schema::default(), "memory")
    }

    #[test]
    fn parses_well_formed_file() {
        let text = format!(
            "{}\n{}\n{}\n{}\n",
            header_line(),
            row("2013-01-01 10:00", "1", "COLISAO"),
            row("2013-01-02 11:30", "0", "CHOQUE"),
            row("2013-01-03 12:15", "2", "COLISAO"),
        );
        let raw = parse(&text).unwrap();
        assert_eq!(raw.len(), 3);
        assert!(raw.unknown_columns.is_empty());
    }

    #[test]
    fn missing_required_column_is_named() {
        let header = header_line().replace(";MOTO;", ";");
        let err = parse(&format!("{header}\n")).unwrap_err();
        match err {
            Error::MissingColumn(name) => assert_eq!(name, "MOTO"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn arity_mismatch_reports_row() {
        let text = format!("{}\n{}\n1;2;3\n", header_line(), row("2013-01-01 10:00", "1", "A"));
        match parse(&text).unwrap_err() {
            Error::Parse { row, .. } => assert_eq!(row, 3),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn header_matching_ignores_case_accents_and_aliases() {
        let header = header_line()
            .replace("REGIAO", "Região")
            .replace("MORTES_POST", "MORTE_POST")
            .replace("TIPO_ACID", "tipo_acid");
        let text = format!("{header};EXTRA\n{};zzz\n", row("2013-01-01 10:00", "1", "A"));
        let raw = parse(&text).unwrap();
        assert_eq!(raw.unknown_columns, vec!["EXTRA".to_string()]);
        assert!(raw.column_positions.iter().all(Option::is_some));
    }

    #[test]
    fn impossible_datetime_is_dropped() {
        let mut text = header_line() + "\n";
        for i in 0..10 {
            text += &row(&format!("2013-01-{:02} 10:00", i + 1), "0", "A");
            text += "\n";
        }
        text += &row("2013-02-30 25:99", "0", "A");
        text += "\n";
        let raw = parse(&text).unwrap();
        let clean = cleanse(&raw, &Schema::default()).unwrap();
        assert_eq!(clean.n_rows(), 10);
        assert_eq!(clean.dropped.dropped_row_indices, vec![10]);
        assert!(clean.dropped.reasons[0].contains("invalid date/time"));
    }

    #[test]
    fn excluded_columns_are_removed() {
        let text = format!("{}\n{}\n", header_line(), row("2013-01-01 10:00", "1", "A"));
        let clean = cleanse(&parse(&text).unwrap(), &Schema::default()).unwrap();
        for name in ["FONTE", "UPS", "ID", "BOLETIM", "LATITUDE", "LOG1"] {
            assert!(clean.column(name).is_none(), "{name} survived cleansing");
        }
        assert_eq!(clean.columns.len(), 10 + 9 + 1 + 5);
    }

    #[test]
    fn too_many_drops_is_an_error() {
        let text = format!(
            "{}\n{}\n{}\n",
            header_line(),
            row("2013-01-01 10:00", "1", "A"),
            row("bad", "1", "A")
        );
        let err = cleanse(&parse(&text).unwrap(), &Schema::default()).unwrap_err();
        assert!(matches!(err, Error::ExcessiveDrops { dropped: 1, total: 2 }));
    }

    #[test]
    fn negative_or_garbage_counts_drop_the_row() {
        let mut text = header_line() + "\n";
        for _ in 0..20 {
            text += &row("2013-01-01 10:00", "1", "A");
            text += "\n";
        }
        text += &row("2013-01-01 10:00", "-1", "A");
        text += "\n";
        text += &row("2013-01-01 10:00", "two", "A");
        text += "\n";
        let clean = cleanse(&parse(&text).unwrap(), &Schema::default()).unwrap();
        assert_eq!(clean.dropped.dropped_row_indices, vec![20, 21]);
        assert!(clean.dropped.reasons.iter().all(|r| r.contains("MOTO")));
    }

    #[test]
    fn categories_interned_in_first_appearance_order() {
        let text = format!(
            "{}\n{}\n{}\n{}\n{}\n",
            header_line(),
            row("2013-01-01 10:00", "1", "QUEDA"),
            row("2013-01-01 10:00", "1", "COLISAO"),
            row("2013-01-01 10:00", "1", ""),
            row("2013-01-01 10:00", "1", "QUEDA"),
        );
        let clean = cleanse(&parse(&text).unwrap(), &Schema::default()).unwrap();
        match &clean.column("TIPO_ACID").unwrap().data {
            ColumnData::Categorical { codes, levels } => {
                assert_eq!(levels, &["QUEDA", "COLISAO", MISSING_CATEGORY]);
                assert_eq!(codes, &[0, 1, 2, 0]);
            }
            other => panic!("unexpected column data {other:?}"),
        }
    }

    #[test]
    fn latin1_input_is_decoded() {
        let text = format!("{}\n{}\n", header_line(), row("2013-01-01 10:00", "1", "COLISÃO"));
        let latin1: Vec<u8> = text.chars().map(|c| c as u32 as u8).collect();
        let raw = parse_dataset(latin1.as_slice(), &Schema::default(), "latin1").unwrap();
        let pos = raw.column_positions[11].unwrap();
        assert_eq!(raw.rows[0][pos], "COLISÃO");
    }

    #[test]
    fn lenient_time_forms() {
        let fmts = default_date_formats();
        assert!(parse_datetime("2013-05-01 7:05", &fmts).is_some());
        assert!(parse_datetime("2013-05-01 07:05:30", &fmts).is_some());
        assert!(parse_datetime("2013-05-01 07:05:30.000", &fmts).is_some());
        assert!(parse_datetime("2013-05-01", &fmts).is_some());
        assert!(parse_datetime("2013-05-01 24:00", &fmts).is_none());
        assert!(parse_datetime("2013-13-01 10:00", &fmts).is_none());
        assert!(parse_datetime("", &fmts).is_none());
    }

    #[test]
    fn cleanse_is_deterministic() {
        let text = format!(
            "{}\n{}\n{}\n",
            header_line(),
            row("2013-01-01 10:00", "1", "B"),
            row("2013-01-01 10:00", "1", "A"),
        );
        let a = cleanse(&parse(&text).unwrap(), &Schema::default()).unwrap();
        let b = cleanse(&parse(&text).unwrap(), &Schema::default()).unwrap();
        assert_eq!(a, b);
    }
}
