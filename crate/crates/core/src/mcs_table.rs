//! CQI / SINR-threshold / transport-block-size mapping.
//!
//! Each row pairs a CQI index with the HS-PDSCH SINR at which its MCS meets
//! the BER target and the transport block size it carries per TTI. Tables
//! are loaded from CSV with the header `cqi,sinr_db,tbs_bits,mod_order,codes`;
//! lines starting with `#` are comments.

use std::fmt::Write as _;

use thiserror::Error;

/// CQI report value meaning "no supportable MCS".
pub const CQI_OUT_OF_RANGE: u8 = 0;

const CSV_HEADER: [&str; 5] = ["cqi", "sinr_db", "tbs_bits", "mod_order", "codes"];

/// Bundled synthetic table, see [`McsTable::synthetic`].
const DEFAULT_TABLE_CSV: &str = include_str!("../data/default_mcs_table.csv");
const CATEGORY10_TABLE_CSV: &str = include_str!("../data/category10_mcs_table.csv");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TableError {
    #[error("line {line}: {msg}")]
    Malformed { line: u64, msg: String },
    #[error("missing or wrong header, expected `{}`", CSV_HEADER.join(","))]
    Header,
    #[error("line {line}: expected cqi {expected}, found {found}")]
    IndexGap { line: u64, expected: u32, found: u32 },
    #[error("line {line}: sinr threshold {value} dB is not above the previous row's {previous} dB")]
    NonMonotoneThreshold { line: u64, value: f64, previous: f64 },
    #[error("line {line}: transport block size {value} is smaller than the previous row's {previous}")]
    DecreasingTbs { line: u64, value: u32, previous: u32 },
    #[error("line {line}: transport block size must be positive")]
    ZeroTbs { line: u64 },
    #[error("line {line}: sinr threshold must be finite")]
    NonFinite { line: u64 },
    #[error("table has no entries")]
    Empty,
    #[error("cqi index {0} is not in the table")]
    InvalidIndex(u8),
    #[error("invalid table generation parameters: {0}")]
    Generation(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McsEntry {
    pub cqi: u8,
    /// SINR threshold beta in dB.
    pub sinr_threshold_db: f64,
    /// Transport block size tau in bits.
    pub tbs_bits: u32,
    /// Bits per symbol; informational.
    pub modulation_order: u8,
    /// HS-PDSCH code count; informational.
    pub num_codes: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McsTable {
    entries: Vec<McsEntry>,
    ber_target: f64,
}

impl McsTable {
    pub const DEFAULT_BER_TARGET: f64 = 0.1;

    /// Builds a table, enforcing consecutive indices from 1, strictly
    /// increasing thresholds and non-decreasing block sizes. Row numbers in
    /// errors count data rows from 1.
    pub fn from_entries(entries: Vec<McsEntry>, ber_target: f64) -> Result<Self, TableError> {
        let lines: Vec<u64> = (1..=entries.len() as u64).collect();
        Self::validated(entries, &lines, ber_target)
    }

    fn validated(entries: Vec<McsEntry>, lines: &[u64], ber_target: f64) -> Result<Self, TableError> {
        if entries.is_empty() {
            return Err(TableError::Empty);
        }
        if entries.len() > usize::from(u8::MAX) {
            return Err(TableError::Malformed {
                line: lines[usize::from(u8::MAX)],
                msg: "more than 255 entries".into(),
            });
        }
        for (k, (e, &line)) in entries.iter().zip(lines).enumerate() {
            let expected = k as u32 + 1;
            if u32::from(e.cqi) != expected {
                return Err(TableError::IndexGap {
                    line,
                    expected,
                    found: u32::from(e.cqi),
                });
            }
            if !e.sinr_threshold_db.is_finite() {
                return Err(TableError::NonFinite { line });
            }
            if e.tbs_bits == 0 {
                return Err(TableError::ZeroTbs { line });
            }
            if k > 0 {
                let prev = &entries[k - 1];
                if e.sinr_threshold_db <= prev.sinr_threshold_db {
                    return Err(TableError::NonMonotoneThreshold {
                        line,
                        value: e.sinr_threshold_db,
                        previous: prev.sinr_threshold_db,
                    });
                }
                if e.tbs_bits < prev.tbs_bits {
                    return Err(TableError::DecreasingTbs {
                        line,
                        value: e.tbs_bits,
                        previous: prev.tbs_bits,
                    });
                }
            }
        }
        Ok(Self { entries, ber_target })
    }

    /// Parses the CSV table format. Errors carry the 1-based line number in
    /// the source text.
    pub fn load_csv(source: &str, ber_target: f64) -> Result<Self, TableError> {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(source.as_bytes());
        let header = reader.headers().map_err(|e| TableError::Malformed {
            line: e.position().map_or(1, |p| p.line()),
            msg: e.to_string(),
        })?;
        if header.iter().ne(CSV_HEADER.iter().copied()) {
            return Err(TableError::Header);
        }

        let mut entries = Vec::new();
        let mut lines = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| TableError::Malformed {
                line: e.position().map_or(0, |p| p.line()),
                msg: e.to_string(),
            })?;
            let line = record.position().map_or(0, |p| p.line());
            let field = |k: usize| record.get(k).unwrap_or("");
            let bad = |name: &str, raw: &str| TableError::Malformed {
                line,
                msg: format!("cannot parse {name} from `{raw}`"),
            };
            let entry = McsEntry {
                cqi: field(0).parse().map_err(|_| bad("cqi", field(0)))?,
                sinr_threshold_db: field(1).parse().map_err(|_| bad("sinr_db", field(1)))?,
                tbs_bits: field(2).parse().map_err(|_| bad("tbs_bits", field(2)))?,
                modulation_order: field(3).parse().map_err(|_| bad("mod_order", field(3)))?,
                num_codes: field(4).parse().map_err(|_| bad("codes", field(4)))?,
            };
            entries.push(entry);
            lines.push(line);
        }
        Self::validated(entries, &lines, ber_target)
    }

    /// Serialises the table in the format accepted by [`McsTable::load_csv`].
    pub fn to_csv(&self, comment: Option<&str>) -> String {
        let mut out = String::new();
        if let Some(comment) = comment {
            for line in comment.lines() {
                let _ = writeln!(out, "# {line}");
            }
        }
        let _ = writeln!(out, "{}", CSV_HEADER.join(","));
        for e in &self.entries {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                e.cqi, e.sinr_threshold_db, e.tbs_bits, e.modulation_order, e.num_codes
            );
        }
        out
    }

    /// Synthetic table with thresholds `-4.5 + (k-1) * step_db` and block
    /// sizes growing geometrically from 137 to 25558 bits.
    pub fn synthetic(step_db: f64, entries: usize) -> Result<Self, TableError> {
        const FIRST_TBS: f64 = 137.0;
        const LAST_TBS: f64 = 25558.0;
        const FIRST_THRESHOLD_DB: f64 = -4.5;
        if !(step_db > 0.0 && step_db.is_finite()) {
            return Err(TableError::Generation(format!("step must be positive, got {step_db}")));
        }
        if !(2..=usize::from(u8::MAX)).contains(&entries) {
            return Err(TableError::Generation(format!(
                "entry count must be within 2..=255, got {entries}"
            )));
        }
        let ratio = (LAST_TBS / FIRST_TBS).powf(1.0 / (entries - 1) as f64);
        let rows = (0..entries)
            .map(|k| {
                let frac = k as f64 / (entries - 1) as f64;
                // Modulation and code counts are informational only.
                let (modulation_order, max_codes) = if frac < 0.5 { (2, 5.0) } else { (4, 15.0) };
                McsEntry {
                    cqi: k as u8 + 1,
                    sinr_threshold_db: FIRST_THRESHOLD_DB + k as f64 * step_db,
                    tbs_bits: (FIRST_TBS * ratio.powi(k as i32)).round() as u32,
                    modulation_order,
                    num_codes: (1.0 + frac * (max_codes - 1.0)).round() as u8,
                }
            })
            .collect();
        Self::from_entries(rows, Self::DEFAULT_BER_TARGET)
    }

    /// The bundled 30-entry synthetic table (1 dB spacing, -4.5 .. 24.5 dB).
    pub fn default_table() -> Self {
        Self::load_csv(DEFAULT_TABLE_CSV, Self::DEFAULT_BER_TARGET).expect("bundled MCS table is valid")
    }

    pub fn default_csv() -> &'static str {
        DEFAULT_TABLE_CSV
    }

    /// Category 10 transport block sizes on the default threshold grid. The
    /// block size grows slowly over the top CQIs, unlike the synthetic table.
    pub fn category10() -> Self {
        Self::load_csv(CATEGORY10_TABLE_CSV, Self::DEFAULT_BER_TARGET).expect("bundled MCS table is valid")
    }

    pub fn category10_csv() -> &'static str {
        CATEGORY10_TABLE_CSV
    }

    /// Looks up a bundled table by name (`default` or `category10`).
    pub fn bundled(name: &str) -> Option<Self> {
        match name {
            "default" | "synthetic" => Some(Self::default_table()),
            "category10" => Some(Self::category10()),
            _ => None,
        }
    }

    pub fn with_ber_target(mut self, ber_target: f64) -> Self {
        self.ber_target = ber_target;
        self
    }

    pub fn entries(&self) -> &[McsEntry] {
        &self.entries
    }

    pub fn ber_target(&self) -> f64 {
        self.ber_target
    }

    /// Highest CQI index.
    pub fn max_cqi(&self) -> u8 {
        self.entries.len() as u8
    }

    pub fn entry(&self, cqi: u8) -> Result<&McsEntry, TableError> {
        if cqi == 0 {
            return Err(TableError::InvalidIndex(cqi));
        }
        self.entries
            .get(usize::from(cqi) - 1)
            .ok_or(TableError::InvalidIndex(cqi))
    }

    pub fn threshold_db(&self, cqi: u8) -> Result<f64, TableError> {
        Ok(self.entry(cqi)?.sinr_threshold_db)
    }

    pub fn tbs_bits(&self, cqi: u8) -> Result<u32, TableError> {
        Ok(self.entry(cqi)?.tbs_bits)
    }

    /// Largest index whose threshold does not exceed `sinr_db`, or
    /// [`CQI_OUT_OF_RANGE`] when even the first entry is not supported.
    pub fn cqi_from_sinr(&self, sinr_db: f64) -> u8 {
        if sinr_db.is_nan() {
            return CQI_OUT_OF_RANGE;
        }
        self.entries.partition_point(|e| e.sinr_threshold_db <= sinr_db) as u8
    }

    /// `beta_j - beta_i` in dB.
    pub fn threshold_delta(&self, i: u8, j: u8) -> Result<f64, TableError> {
        Ok(self.threshold_db(j)? - self.threshold_db(i)?)
    }
}

impl Default for McsTable {
    fn default() -> Self {
        Self::default_table()
    }
}

/// Header comment written above generated tables.
pub fn synthetic_table_comment(step_db: f64, entries: usize) -> String {
    format!(
        "Synthetic MCS table: {entries} entries, thresholds from -4.5 dB in {step_db} dB steps,\n\
         transport block sizes geometric from 137 to 25558 bits. Not a standardised table."
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(cqi: u8, thr: f64, tbs: u32) -> McsEntry {
        McsEntry {
            cqi,
            sinr_threshold_db: thr,
            tbs_bits: tbs,
            modulation_order: 2,
            num_codes: 1,
        }
    }

    #[test]
    fn loads_thirty_rows() {
        let table = McsTable::default_table();
        assert_eq!(table.entries().len(), 30);
        assert_eq!(table.max_cqi(), 30);
        assert_eq!(table.threshold_db(1).unwrap(), -4.5);
        assert_eq!(table.threshold_db(30).unwrap(), 24.5);
        assert_eq!(table.tbs_bits(1).unwrap(), 137);
        assert_eq!(table.tbs_bits(30).unwrap(), 25558);
    }

    #[test]
    fn bundled_table_matches_generator() {
        let generated = McsTable::synthetic(1.0, 30).unwrap();
        assert_eq!(generated, McsTable::default_table());
    }

    #[test]
    fn non_monotone_threshold_names_row() {
        let csv = "cqi,sinr_db,tbs_bits,mod_order,codes\n1,3.0,100,2,1\n2,5.0,120,2,1\n3,4.0,140,2,1\n";
        let err = McsTable::load_csv(csv, 0.1).unwrap_err();
        assert!(
            matches!(err, TableError::NonMonotoneThreshold { line: 4, .. }),
            "{err:?}"
        );
        assert!(err.to_string().starts_with("line 4"));
    }

    #[test]
    fn gapped_and_duplicate_indices_rejected() {
        let gap = "cqi,sinr_db,tbs_bits,mod_order,codes\n1,0,100,2,1\n3,1,120,2,1\n";
        assert!(matches!(
            McsTable::load_csv(gap, 0.1),
            Err(TableError::IndexGap {
                line: 3,
                expected: 2,
                found: 3
            })
        ));
        let dup = "cqi,sinr_db,tbs_bits,mod_order,codes\n1,0,100,2,1\n1,1,120,2,1\n";
        assert!(matches!(
            McsTable::load_csv(dup, 0.1),
            Err(TableError::IndexGap { line: 3, .. })
        ));
    }

    #[test]
    fn malformed_rows_rejected() {
        let csv = "cqi,sinr_db,tbs_bits,mod_order,codes\n1,abc,100,2,1\n";
        assert!(matches!(
            McsTable::load_csv(csv, 0.1),
            Err(TableError::Malformed { line: 2, .. })
        ));
        let short = "cqi,sinr_db,tbs_bits,mod_order,codes\n1,0.0,100\n";
        assert!(McsTable::load_csv(short, 0.1).is_err());
        assert_eq!(McsTable::load_csv("a,b\n1,2\n", 0.1), Err(TableError::Header));
        let decreasing = "cqi,sinr_db,tbs_bits,mod_order,codes\n1,0,100,2,1\n2,1,90,2,1\n";
        assert!(matches!(
            McsTable::load_csv(decreasing, 0.1),
            Err(TableError::DecreasingTbs { line: 3, .. })
        ));
        assert!(McsTable::from_entries(vec![entry(1, 0.0, 0)], 0.1).is_err());
        assert_eq!(McsTable::from_entries(vec![], 0.1), Err(TableError::Empty));
    }

    #[test]
    fn comments_are_skipped() {
        let csv = "# synthetic\ncqi,sinr_db,tbs_bits,mod_order,codes\n# note\n1,0,100,2,1\n2,1,120,2,1\n";
        let table = McsTable::load_csv(csv, 0.1).unwrap();
        assert_eq!(table.max_cqi(), 2);
    }

    #[test]
    fn cqi_lookup_boundaries() {
        let table = McsTable::default_table();
        assert_eq!(table.cqi_from_sinr(table.threshold_db(7).unwrap()), 7);
        assert_eq!(table.cqi_from_sinr(-4.6), CQI_OUT_OF_RANGE);
        assert_eq!(table.cqi_from_sinr(1e9), 30);
        assert_eq!(table.cqi_from_sinr(f64::INFINITY), 30);
        assert_eq!(table.cqi_from_sinr(f64::NEG_INFINITY), 0);
        assert_eq!(table.cqi_from_sinr(f64::NAN), 0);
    }

    #[test]
    fn threshold_delta_examples() {
        let table = McsTable::default_table();
        assert_eq!(table.threshold_delta(5, 5).unwrap(), 0.0);
        assert_eq!(
            table.threshold_delta(3, 11).unwrap(),
            -table.threshold_delta(11, 3).unwrap()
        );
        assert_eq!(table.threshold_delta(1, 30).unwrap(), 24.5 - (-4.5));
        assert_eq!(table.threshold_delta(0, 3), Err(TableError::InvalidIndex(0)));
        assert_eq!(table.threshold_delta(1, 31), Err(TableError::InvalidIndex(31)));
    }

    #[test]
    fn generator_rejects_bad_parameters() {
        assert!(McsTable::synthetic(1.0, 1).is_err());
        assert!(McsTable::synthetic(0.0, 30).is_err());
        assert!(McsTable::synthetic(-1.0, 30).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let table = McsTable::synthetic(0.7, 18).unwrap();
        let text = table.to_csv(Some(&synthetic_table_comment(0.7, 18)));
        let back = McsTable::load_csv(&text, table.ber_target()).unwrap();
        assert_eq!(back, table);
    }
}
