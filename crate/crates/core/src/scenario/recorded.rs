use std::io::Read;
use std::path::Path;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{trial_rng, Burst};
use crate::error::{domain, Error, Result};
use crate::vec2::Vec2;

const HEADER: [&str; 4] = ["bin_index", "pulse_index", "re", "im"];

/// How the additive floor is applied to recorded samples.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OffsetMode {
    /// Add the offset to both the real and the imaginary part.
    Literal,
    /// Add independent white Gaussian noise with per-axis power `offset`,
    /// drawn from the stream keyed by `seed`.
    NoiseFloor { seed: u64 },
}

/// A table of complex returns indexed by range bin and pulse.
#[derive(Clone, Debug, PartialEq)]
pub struct RecordedSeries {
    bins: usize,
    pulses: usize,
    /// Bin-major samples, `samples[bin * pulses + pulse]`.
    samples: Vec<Vec2>,
    offset: f64,
}

impl RecordedSeries {
    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn pulses(&self) -> usize {
        self.pulses
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// All pulses of one range bin.
    pub fn bin(&self, bin: usize) -> Result<&[Vec2]> {
        if bin >= self.bins {
            return domain(format!(
                "bin {bin} out of range (series has {} bins)",
                self.bins
            ));
        }
        Ok(&self.samples[bin * self.pulses..(bin + 1) * self.pulses])
    }

    /// `(pulse_index, ‖x‖²)` for every pulse of one bin.
    pub fn power_trace(&self, bin: usize) -> Result<Vec<(usize, f64)>> {
        Ok(self
            .bin(bin)?
            .iter()
            .map(|x| x.norm_sq())
            .enumerate()
            .collect())
    }

    /// Bursts of `k` consecutive pulses starting at `0, stride, 2·stride, …`
    /// while they fit; there are `⌊(T − k)/stride⌋ + 1` of them.
    pub fn sliding_bursts(&self, bin: usize, k: usize, stride: usize) -> Result<Vec<Burst>> {
        let row = self.bin(bin)?;
        if k == 0 || k > self.pulses {
            return domain(format!("burst length {k} must be in 1..={}", self.pulses));
        }
        if stride == 0 {
            return domain("stride must be at least 1");
        }
        (0..=self.pulses - k)
            .step_by(stride)
            .map(|start| Burst::new(row[start..start + k].to_vec()))
            .collect()
    }

    fn apply_offset(&mut self, offset: f64, mode: OffsetMode) {
        self.offset = offset;
        if offset == 0.0 {
            return;
        }
        match mode {
            OffsetMode::Literal => {
                for x in &mut self.samples {
                    *x += Vec2::new(offset, offset);
                }
            }
            OffsetMode::NoiseFloor { seed } => {
                let scale = offset.sqrt();
                let mut rng = trial_rng(seed, 0);
                for x in &mut self.samples {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    *x += scale * Vec2::new(re, im);
                }
            }
        }
    }
}

fn parse_field<T: std::str::FromStr>(
    field: &str,
    line: u64,
    column: usize,
    what: &str,
) -> Result<T> {
    field.trim().parse().map_err(|_| Error::Parse {
        line,
        column,
        message: format!("cannot parse {what} from {:?}", field.trim()),
    })
}

/// Number of length-`k` bursts that [`RecordedSeries::sliding_bursts`] cuts
/// from `pulses` samples, `⌊(pulses − k)/stride⌋ + 1`, or zero if none fit.
pub fn sliding_bursts_count(pulses: usize, k: usize, stride: usize) -> usize {
    if k == 0 || stride == 0 || k > pulses {
        0
    } else {
        (pulses - k) / stride + 1
    }
}

/// Reads a `bin_index, pulse_index, re, im` table.
///
/// Rows may come in any order, but every `(bin, pulse)` pair of a
/// rectangular grid starting at zero must appear exactly once.
pub fn parse_recorded<R: Read>(reader: R) -> Result<RecordedSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);

    let header = rdr.headers().map_err(|e| Error::Parse {
        line: 1,
        column: 1,
        message: e.to_string(),
    })?;
    if header.len() != HEADER.len() || header.iter().zip(HEADER).any(|(a, b)| a != b) {
        return Err(Error::Parse {
            line: 1,
            column: 1,
            message: format!(
                "expected header {:?}, found {:?}",
                HEADER,
                header.iter().collect::<Vec<_>>()
            ),
        });
    }

    let mut rows: Vec<(usize, usize, Vec2, u64)> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            column: 1,
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 4 {
            return Err(Error::Parse {
                line,
                column: record.len().min(4) + 1,
                message: format!("expected 4 fields, found {}", record.len()),
            });
        }
        let bin: usize = parse_field(&record[0], line, 1, "bin index")?;
        let pulse: usize = parse_field(&record[1], line, 2, "pulse index")?;
        let re: f64 = parse_field(&record[2], line, 3, "real part")?;
        let im: f64 = parse_field(&record[3], line, 4, "imaginary part")?;
        for (v, col) in [(re, 3), (im, 4)] {
            if !v.is_finite() {
                return Err(Error::Parse {
                    line,
                    column: col,
                    message: format!("non-finite value {v}"),
                });
            }
        }
        rows.push((bin, pulse, Vec2::new(re, im), line));
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 2,
            column: 1,
            message: "no data rows".into(),
        });
    }

    let bins = rows.iter().map(|r| r.0).max().unwrap() + 1;
    let pulses = rows.iter().map(|r| r.1).max().unwrap() + 1;
    let mut cells: Vec<Option<Vec2>> = vec![None; bins * pulses];
    for &(bin, pulse, x, line) in &rows {
        let slot = &mut cells[bin * pulses + pulse];
        if slot.is_some() {
            return Err(Error::Parse {
                line,
                column: 1,
                message: format!("duplicate sample for bin {bin}, pulse {pulse}"),
            });
        }
        *slot = Some(x);
    }
    if let Some(i) = cells.iter().position(Option::is_none) {
        let (bin, pulse) = (i / pulses, i % pulses);
        let line = rows.last().map_or(0, |r| r.3);
        return Err(Error::Parse {
            line,
            column: 1,
            message: format!("ragged table: bin {bin} has no sample for pulse {pulse}"),
        });
    }
    Ok(RecordedSeries {
        bins,
        pulses,
        samples: cells.into_iter().map(Option::unwrap).collect(),
        offset: 0.0,
    })
}

/// Loads a recorded series from disk and applies the additive floor.
pub fn ingest_recorded(path: &Path, offset: f64, mode: OffsetMode) -> Result<RecordedSeries> {
    if !(offset.is_finite() && offset >= 0.0) {
        return domain(format!("offset must be finite and >= 0, got {offset}"));
    }
    let file = std::fs::File::open(path)?;
    let mut series = parse_recorded(std::io::BufReader::new(file))?;
    series.apply_offset(offset, mode);
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY: &str = "bin_index,pulse_index,re,im\n\
        0,0,1.0,0.5\n0,1,-0.25,2.0\n0,2,0.125,0.0\n0,3,3.0,-1.0\n\
        1,0,0.1,0.2\n1,1,0.3,0.4\n1,2,0.5,0.6\n1,3,0.7,0.8\n";

    fn toy() -> RecordedSeries {
        parse_recorded(TOY.as_bytes()).unwrap()
    }

    #[test]
    fn toy_structure() {
        let s = toy();
        assert_eq!((s.bins(), s.pulses(), s.len()), (2, 4, 8));
        assert_eq!(s.bin(0).unwrap()[1], Vec2::new(-0.25, 2.0));
    }

    #[test]
    fn zero_offset_is_identity() {
        let mut a = toy();
        a.apply_offset(0.0, OffsetMode::NoiseFloor { seed: 1 });
        assert_eq!(a.samples, toy().samples);
        a.apply_offset(0.0, OffsetMode::Literal);
        assert_eq!(a.samples, toy().samples);
    }

    #[test]
    fn literal_offset() {
        let mut a = toy();
        a.apply_offset(1.0, OffsetMode::Literal);
        assert_eq!(a.bin(0).unwrap()[0], Vec2::new(2.0, 1.5));
        assert_eq!(a.offset(), 1.0);
    }

    #[test]
    fn power_trace_values() {
        let trace = toy().power_trace(0).unwrap();
        assert_eq!(
            trace,
            vec![(0, 1.25), (1, 4.0625), (2, 0.015625), (3, 10.0)]
        );
    }

    #[test]
    fn sliding_counts() {
        let body: String = (0..10).map(|p| format!("0,{p},1.0,{p}.0\n")).collect();
        let s = parse_recorded(format!("bin_index,pulse_index,re,im\n{body}").as_bytes()).unwrap();
        let b = s.sliding_bursts(0, 4, 2).unwrap();
        assert_eq!(b.len(), 4);
        assert_eq!(b[3].samples()[0], Vec2::new(1.0, 6.0));
        assert_eq!(s.sliding_bursts(0, 5, 5).unwrap().len(), 2);
        assert_eq!(s.sliding_bursts(0, 10, 1).unwrap().len(), 1);
        assert!(s.sliding_bursts(1, 4, 2).is_err());
        assert!(s.sliding_bursts(0, 11, 1).is_err());
        assert!(s.sliding_bursts(0, 4, 0).is_err());
        for k in 1..=10 {
            for stride in 1..=12 {
                assert_eq!(
                    s.sliding_bursts(0, k, stride).unwrap().len(),
                    sliding_bursts_count(10, k, stride)
                );
            }
        }
    }

    #[test]
    fn parse_errors_carry_location() {
        let bad = "bin_index,pulse_index,re,im\n0,0,1.0,0.0\n0,1,abc,0.0\n";
        match parse_recorded(bad.as_bytes()) {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (3, 3)),
            other => panic!("unexpected {other:?}"),
        }
        let nan = "bin_index,pulse_index,re,im\n0,0,1.0,NaN\n";
        match parse_recorded(nan.as_bytes()) {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (2, 4)),
            other => panic!("unexpected {other:?}"),
        }
        let ragged = "bin_index,pulse_index,re,im\n0,0,1,0\n0,1,1,0\n1,0,1,0\n";
        assert!(matches!(
            parse_recorded(ragged.as_bytes()),
            Err(Error::Parse { .. })
        ));
        let header = "bin,pulse,re,im\n0,0,1,0\n";
        assert!(matches!(
            parse_recorded(header.as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
        let short = "bin_index,pulse_index,re,im\n0,0,1\n";
        assert!(matches!(
            parse_recorded(short.as_bytes()),
            Err(Error::Parse { .. })
        ));
    }
}
