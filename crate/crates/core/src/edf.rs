//! EDF reading and writing.
//!
//! Layout: a 256-byte ASCII fixed header, 256 bytes of per-signal header
//! fields (stored field-major: all labels, then all transducers, ...), then
//! `record_count` data records. Each record holds `samples_per_record`
//! little-endian `i16` values for every signal in header order.
//!
//! Digital values map to physical units with
//! `phys = phys_min + (dig - dig_min) * (phys_max - phys_min) / (dig_max - dig_min)`.

use chrono::{Datelike, NaiveDate, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const FIXED_HEADER: usize = 256;
const SIGNAL_HEADER: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalDescriptor {
    pub label: String,
    pub transducer: String,
    pub physical_dimension: String,
    pub physical_min: f64,
    pub physical_max: f64,
    pub digital_min: i32,
    pub digital_max: i32,
    pub prefiltering: String,
    pub samples_per_record: usize,
    pub reserved: String,
}

impl SignalDescriptor {
    /// A µV signal spanning `[-range, range]` over the full 16-bit digital range.
    pub fn microvolts(label: impl Into<String>, range: f64, samples_per_record: usize) -> Self {
        Self {
            label: label.into(),
            transducer: String::new(),
            physical_dimension: "uV".into(),
            physical_min: -range,
            physical_max: range,
            digital_min: i16::MIN as i32,
            digital_max: i16::MAX as i32,
            prefiltering: String::new(),
            samples_per_record,
            reserved: String::new(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.digital_min >= self.digital_max {
            return Err(Error::InvalidDigitalRange {
                label: self.label.clone(),
                min: self.digital_min,
                max: self.digital_max,
            });
        }
        if self.digital_min < i16::MIN as i32 || self.digital_max > i16::MAX as i32 {
            return Err(Error::InvalidHeaderField {
                field: "digital range",
                value: format!("[{}, {}]", self.digital_min, self.digital_max),
            });
        }
        if self.physical_min == self.physical_max {
            return Err(Error::InvalidPhysicalRange {
                label: self.label.clone(),
                value: self.physical_min,
            });
        }
        if self.samples_per_record == 0 {
            return Err(Error::InvalidHeaderField {
                field: "samples per record",
                value: "0".into(),
            });
        }
        Ok(())
    }

    fn scale(&self) -> f64 {
        (self.physical_max - self.physical_min) / (self.digital_max - self.digital_min) as f64
    }

    pub fn to_physical(&self, digital: i16) -> f64 {
        self.physical_min + (digital as i32 - self.digital_min) as f64 * self.scale()
    }

    /// Inverse calibration with rounding to the nearest digital step.
    pub fn to_digital(&self, physical: f64) -> Option<i16> {
        let (lo, hi) = if self.physical_min < self.physical_max {
            (self.physical_min, self.physical_max)
        } else {
            (self.physical_max, self.physical_min)
        };
        if !(physical >= lo && physical <= hi) {
            return None;
        }
        let d = ((physical - self.physical_min) / self.scale()).round() as i64 + self.digital_min as i64;
        Some(d.clamp(self.digital_min as i64, self.digital_max as i64) as i16)
    }

    pub fn sample_rate(&self, record_duration: f64) -> f64 {
        self.samples_per_record as f64 / record_duration
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdfHeader {
    pub version: String,
    pub patient_id: String,
    pub recording_id: String,
    pub start: NaiveDateTime,
    pub reserved: String,
    pub record_count: usize,
    pub record_duration: f64,
    pub signals: Vec<SignalDescriptor>,
}

impl EdfHeader {
    /// Header for `recording` with 1 s records and a symmetric µV range wide
    /// enough to hold every sample.
    pub fn for_recording(recording: &Recording) -> Result<Self> {
        let spr = recording.sample_rate.round();
        if (spr - recording.sample_rate).abs() > 1e-9 || spr < 1.0 {
            return Err(Error::InvalidConfig(format!(
                "sample rate {} is not a whole number of samples per second",
                recording.sample_rate
            )));
        }
        let peak = recording
            .samples
            .iter()
            .flatten()
            .fold(0.0_f64, |m, v| m.max(v.abs()));
        let range = peak.ceil().max(1.0);
        Ok(Self {
            version: "0".into(),
            patient_id: "X X X X".into(),
            recording_id: "Startdate X X X X".into(),
            start: NaiveDate::from_ymd_opt(2000, 1, 1)
                .and_then(|d| d.and_hms_opt(0, 0, 0))
                .expect("valid date"),
            reserved: String::new(),
            record_count: recording.len() / spr as usize,
            record_duration: 1.0,
            signals: recording
                .labels
                .iter()
                .map(|l| SignalDescriptor::microvolts(l.clone(), range, spr as usize))
                .collect(),
        })
    }

    pub fn signal_count(&self) -> usize {
        self.signals.len()
    }

    pub fn header_bytes(&self) -> usize {
        FIXED_HEADER + SIGNAL_HEADER * self.signals.len()
    }

    fn record_samples(&self) -> usize {
        self.signals.iter().map(|s| s.samples_per_record).sum()
    }
}

/// Referential electrode signals in physical units at one common rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub labels: Vec<String>,
    pub samples: Vec<Vec<f64>>,
    pub sample_rate: f64,
}

impl Recording {
    pub fn new(labels: Vec<String>, samples: Vec<Vec<f64>>, sample_rate: f64) -> Result<Self> {
        if labels.len() != samples.len() {
            return Err(Error::LengthMismatch(format!(
                "{} labels for {} signals",
                labels.len(),
                samples.len()
            )));
        }
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::InvalidConfig(format!("sample rate {sample_rate}")));
        }
        if let Some(first) = samples.first() {
            if let Some((i, s)) = samples.iter().enumerate().find(|(_, s)| s.len() != first.len()) {
                return Err(Error::LengthMismatch(format!(
                    "signal {:?} has {} samples, expected {}",
                    labels[i],
                    s.len(),
                    first.len()
                )));
            }
        }
        Ok(Self {
            labels,
            samples,
            sample_rate,
        })
    }

    /// Samples per signal.
    pub fn len(&self) -> usize {
        self.samples.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn duration(&self) -> f64 {
        self.len() as f64 / self.sample_rate
    }
}

/// A parsed EDF file holding raw digital samples.
#[derive(Debug, Clone, PartialEq)]
pub struct EdfFile {
    pub header: EdfHeader,
    pub digital: Vec<Vec<i16>>,
}

impl EdfFile {
    pub fn parse(bytes: &[u8]) -> Result<Self> {
        let header = parse_header(bytes)?;
        let per_record = header.record_samples();
        let data = &bytes[header.header_bytes()..];
        let expected = header.record_count * per_record * 2;
        if data.len() < expected {
            return Err(Error::TruncatedData {
                expected,
                found: data.len(),
            });
        }

        let mut digital: Vec<Vec<i16>> = header
            .signals
            .iter()
            .map(|s| Vec::with_capacity(s.samples_per_record * header.record_count))
            .collect();
        let mut words = data[..expected]
            .chunks_exact(2)
            .map(|c| i16::from_le_bytes([c[0], c[1]]));
        for _ in 0..header.record_count {
            for (sig, out) in header.signals.iter().zip(digital.iter_mut()) {
                out.extend(words.by_ref().take(sig.samples_per_record));
            }
        }
        Ok(Self { header, digital })
    }

    pub fn physical(&self, signal: usize) -> Vec<f64> {
        let desc = &self.header.signals[signal];
        self.digital[signal].iter().map(|&d| desc.to_physical(d)).collect()
    }

    /// Converts the signals named in `select` (all signals when `None`) to a
    /// [`Recording`]. Selected signals must share one sample rate.
    pub fn recording(&self, select: Option<&[String]>) -> Result<Recording> {
        let indices: Vec<usize> = match select {
            None => (0..self.header.signals.len()).collect(),
            Some(names) => names
                .iter()
                .map(|n| {
                    self.header
                        .signals
                        .iter()
                        .position(|s| s.label.trim().eq_ignore_ascii_case(n.trim()))
                        .ok_or_else(|| Error::MissingElectrode(n.clone()))
                })
                .collect::<Result<_>>()?,
        };
        let Some(&first) = indices.first() else {
            return Err(Error::EmptySignal);
        };
        let rate = self.header.signals[first].sample_rate(self.header.record_duration);
        for &i in &indices[1..] {
            let r = self.header.signals[i].sample_rate(self.header.record_duration);
            if r != rate {
                return Err(Error::MixedSampleRates {
                    first_label: self.header.signals[first].label.clone(),
                    first: rate,
                    other_label: self.header.signals[i].label.clone(),
                    other: r,
                });
            }
        }
        Recording::new(
            indices.iter().map(|&i| self.header.signals[i].label.clone()).collect(),
            indices.iter().map(|&i| self.physical(i)).collect(),
            rate,
        )
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let h = &self.header;
        if self.digital.len() != h.signals.len() {
            return Err(Error::LengthMismatch(format!(
                "{} digital signals for {} descriptors",
                self.digital.len(),
                h.signals.len()
            )));
        }
        for (sig, d) in h.signals.iter().zip(&self.digital) {
            if d.len() != sig.samples_per_record * h.record_count {
                return Err(Error::LengthMismatch(format!(
                    "signal {:?} has {} samples, header implies {}",
                    sig.label,
                    d.len(),
                    sig.samples_per_record * h.record_count
                )));
            }
        }
        let mut out = encode_header(h)?;
        out.reserve(h.record_count * h.record_samples() * 2);
        for r in 0..h.record_count {
            for (sig, d) in h.signals.iter().zip(&self.digital) {
                let spr = sig.samples_per_record;
                for v in &d[r * spr..(r + 1) * spr] {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        Ok(out)
    }
}

/// Parses an EDF byte stream into a single-rate [`Recording`] plus its header.
pub fn parse_edf(bytes: &[u8]) -> Result<(Recording, EdfHeader)> {
    let file = EdfFile::parse(bytes)?;
    let rec = file.recording(None)?;
    Ok((rec, file.header))
}

/// Encodes `recording` using the calibration in `header`. `record_count` is
/// taken from the recording length. Samples outside a signal's physical
/// range are rejected.
pub fn write_edf(recording: &Recording, header: &EdfHeader) -> Result<Vec<u8>> {
    if recording.labels.len() != header.signals.len() {
        return Err(Error::LengthMismatch(format!(
            "{} signals in recording, {} in header",
            recording.labels.len(),
            header.signals.len()
        )));
    }
    let mut header = header.clone();
    let mut record_count = None;
    let mut digital = Vec::with_capacity(recording.samples.len());
    for (sig, samples) in header.signals.iter().zip(&recording.samples) {
        sig.validate()?;
        let rate = sig.sample_rate(header.record_duration);
        if (rate - recording.sample_rate).abs() > 1e-9 * rate.max(1.0) {
            return Err(Error::MixedSampleRates {
                first_label: "recording".into(),
                first: recording.sample_rate,
                other_label: sig.label.clone(),
                other: rate,
            });
        }
        if samples.len() % sig.samples_per_record != 0 {
            return Err(Error::LengthMismatch(format!(
                "signal {:?}: {} samples is not a whole number of {}-sample records",
                sig.label,
                samples.len(),
                sig.samples_per_record
            )));
        }
        record_count.get_or_insert(samples.len() / sig.samples_per_record);
        let d = samples
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                sig.to_digital(v).ok_or_else(|| Error::SampleOutOfRange {
                    label: sig.label.clone(),
                    index: i,
                    value: v,
                    min: sig.physical_min.min(sig.physical_max),
                    max: sig.physical_min.max(sig.physical_max),
                })
            })
            .collect::<Result<Vec<i16>>>()?;
        digital.push(d);
    }
    header.record_count = record_count.unwrap_or(0);
    EdfFile { header, digital }.to_bytes()
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn text(&mut self, width: usize) -> String {
        let raw = &self.bytes[self.pos..self.pos + width];
        self.pos += width;
        String::from_utf8_lossy(raw).trim_end().to_string()
    }

    fn number<T: std::str::FromStr>(&mut self, width: usize, field: &'static str) -> Result<T> {
        let s = self.text(width);
        s.trim().parse().map_err(|_| Error::InvalidHeaderField { field, value: s })
    }
}

fn parse_header(bytes: &[u8]) -> Result<EdfHeader> {
    if bytes.len() < FIXED_HEADER {
        return Err(Error::TruncatedHeader {
            needed: FIXED_HEADER,
            available: bytes.len(),
        });
    }
    let mut c = Cursor { bytes, pos: 0 };
    let version = c.text(8);
    let patient_id = c.text(80);
    let recording_id = c.text(80);
    let date = c.text(8);
    let time = c.text(8);
    let start = parse_start(&date, &time)?;
    let header_bytes: usize = c.number(8, "header bytes")?;
    let reserved = c.text(44);
    let record_count: i64 = c.number(8, "number of data records")?;
    let record_duration: f64 = c.number(8, "record duration")?;
    let ns: usize = c.number(4, "number of signals")?;
    if ns == 0 {
        return Err(Error::InvalidHeaderField {
            field: "number of signals",
            value: "0".into(),
        });
    }
    if !(record_duration.is_finite() && record_duration > 0.0) {
        return Err(Error::InvalidHeaderField {
            field: "record duration",
            value: record_duration.to_string(),
        });
    }
    let needed = FIXED_HEADER + SIGNAL_HEADER * ns;
    if header_bytes != needed {
        return Err(Error::InvalidHeaderField {
            field: "header bytes",
            value: header_bytes.to_string(),
        });
    }
    if bytes.len() < needed {
        return Err(Error::TruncatedHeader {
            needed,
            available: bytes.len(),
        });
    }

    let texts = |c: &mut Cursor, w: usize| (0..ns).map(|_| c.text(w)).collect::<Vec<_>>();
    let labels = texts(&mut c, 16);
    let transducers = texts(&mut c, 80);
    let dims = texts(&mut c, 8);
    let pmin = (0..ns).map(|_| c.number::<f64>(8, "physical minimum")).collect::<Result<Vec<_>>>()?;
    let pmax = (0..ns).map(|_| c.number::<f64>(8, "physical maximum")).collect::<Result<Vec<_>>>()?;
    let dmin = (0..ns).map(|_| c.number::<i32>(8, "digital minimum")).collect::<Result<Vec<_>>>()?;
    let dmax = (0..ns).map(|_| c.number::<i32>(8, "digital maximum")).collect::<Result<Vec<_>>>()?;
    let prefilter = texts(&mut c, 80);
    let spr = (0..ns).map(|_| c.number::<usize>(8, "samples per record")).collect::<Result<Vec<_>>>()?;
    let sig_reserved = texts(&mut c, 32);

    let signals = (0..ns)
        .map(|i| SignalDescriptor {
            label: labels[i].clone(),
            transducer: transducers[i].clone(),
            physical_dimension: dims[i].clone(),
            physical_min: pmin[i],
            physical_max: pmax[i],
            digital_min: dmin[i],
            digital_max: dmax[i],
            prefiltering: prefilter[i].clone(),
            samples_per_record: spr[i],
            reserved: sig_reserved[i].clone(),
        })
        .collect::<Vec<_>>();
    for s in &signals {
        s.validate()?;
    }

    let per_record: usize = signals.iter().map(|s| s.samples_per_record).sum();
    let record_count = if record_count < 0 {
        // -1 marks an unknown count; infer it from the data length.
        (bytes.len() - needed) / (per_record * 2)
    } else {
        record_count as usize
    };

    Ok(EdfHeader {
        version,
        patient_id,
        recording_id,
        start,
        reserved,
        record_count,
        record_duration,
        signals,
    })
}

fn parse_start(date: &str, time: &str) -> Result<NaiveDateTime> {
    let parts = |s: &str| -> Option<(u32, u32, u32)> {
        let mut it = s.trim().split(['.', ':']).map(|p| p.trim().parse::<u32>().ok());
        let v = (it.next()??, it.next()??, it.next()??);
        it.next().is_none().then_some(v)
    };
    let bad_date = || Error::InvalidHeaderField {
        field: "start date",
        value: date.to_string(),
    };
    let (dd, mm, yy) = parts(date).ok_or_else(bad_date)?;
    let year = if yy >= 85 { 1900 + yy } else { 2000 + yy };
    let (h, m, s) = parts(time).ok_or_else(|| Error::InvalidHeaderField {
        field: "start time",
        value: time.to_string(),
    })?;
    NaiveDate::from_ymd_opt(year as i32, mm, dd)
        .and_then(|d| d.and_hms_opt(h, m, s))
        .ok_or_else(bad_date)
}

fn encode_header(h: &EdfHeader) -> Result<Vec<u8>> {
    let ns = h.signals.len();
    let mut out = Vec::with_capacity(h.header_bytes());
    put(&mut out, &h.version, 8, "version")?;
    put(&mut out, &h.patient_id, 80, "patient id")?;
    put(&mut out, &h.recording_id, 80, "recording id")?;
    let d = h.start.date();
    let date = format!("{:02}.{:02}.{:02}", d.day(), d.month(), d.year().rem_euclid(100));
    let time = format!(
        "{:02}.{:02}.{:02}",
        h.start.hour(),
        h.start.minute(),
        h.start.second()
    );
    put(&mut out, &date, 8, "start date")?;
    put(&mut out, &time, 8, "start time")?;
    put(&mut out, &h.header_bytes().to_string(), 8, "header bytes")?;
    put(&mut out, &h.reserved, 44, "reserved")?;
    put(&mut out, &h.record_count.to_string(), 8, "number of data records")?;
    put(&mut out, &format_number(h.record_duration, 8, "record duration")?, 8, "record duration")?;
    put(&mut out, &ns.to_string(), 4, "number of signals")?;

    let s = &h.signals;
    for x in s {
        put(&mut out, &x.label, 16, "label")?;
    }
    for x in s {
        put(&mut out, &x.transducer, 80, "transducer")?;
    }
    for x in s {
        put(&mut out, &x.physical_dimension, 8, "physical dimension")?;
    }
    for x in s {
        put(&mut out, &format_number(x.physical_min, 8, "physical minimum")?, 8, "physical minimum")?;
    }
    for x in s {
        put(&mut out, &format_number(x.physical_max, 8, "physical maximum")?, 8, "physical maximum")?;
    }
    for x in s {
        put(&mut out, &x.digital_min.to_string(), 8, "digital minimum")?;
    }
    for x in s {
        put(&mut out, &x.digital_max.to_string(), 8, "digital maximum")?;
    }
    for x in s {
        put(&mut out, &x.prefiltering, 80, "prefiltering")?;
    }
    for x in s {
        put(&mut out, &x.samples_per_record.to_string(), 8, "samples per record")?;
    }
    for x in s {
        put(&mut out, &x.reserved, 32, "signal reserved")?;
    }
    debug_assert_eq!(out.len(), h.header_bytes());
    Ok(out)
}

fn put(out: &mut Vec<u8>, value: &str, width: usize, field: &'static str) -> Result<()> {
    if !value.is_ascii() || value.len() > width {
        return Err(Error::InvalidHeaderField {
            field,
            value: value.to_string(),
        });
    }
    out.extend_from_slice(value.as_bytes());
    out.extend(std::iter::repeat_n(b' ', width - value.len()));
    Ok(())
}

/// Shortest decimal text for `v` that fits `width` characters.
fn format_number(v: f64, width: usize, field: &'static str) -> Result<String> {
    let s = v.to_string();
    if s.len() <= width {
        return Ok(s);
    }
    for prec in (0..width).rev() {
        let s = format!("{v:.prec$}");
        let s = if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        };
        if s.len() <= width {
            return Ok(s);
        }
    }
    Err(Error::InvalidHeaderField {
        field,
        value: s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_signal(dmin: i32, dmax: i32, pmin: f64, pmax: f64, digital: Vec<i16>) -> EdfFile {
        let mut desc = SignalDescriptor::microvolts("FP1", 1.0, digital.len());
        desc.digital_min = dmin;
        desc.digital_max = dmax;
        desc.physical_min = pmin;
        desc.physical_max = pmax;
        EdfFile {
            header: EdfHeader {
                version: "0".into(),
                patient_id: "p".into(),
                recording_id: "r".into(),
                start: NaiveDate::from_ymd_opt(2017, 3, 4)
                    .unwrap()
                    .and_hms_opt(10, 20, 30)
                    .unwrap(),
                reserved: String::new(),
                record_count: 1,
                record_duration: 1.0,
                signals: vec![desc],
            },
            digital: vec![digital],
        }
    }

    #[test]
    fn identity_calibration() {
        let bytes = one_signal(-100, 100, -100.0, 100.0, vec![0, 50]).to_bytes().unwrap();
        let (rec, header) = parse_edf(&bytes).unwrap();
        assert_eq!(rec.samples[0], vec![0.0, 50.0]);
        assert_eq!(rec.sample_rate, 2.0);
        assert_eq!(header.header_bytes(), 512);
        assert_eq!(bytes.len(), 512 + 4);
    }

    #[test]
    fn full_range_calibration_of_zero() {
        // 200 / 65535 per step; digital 0 sits 32768 steps above -100:
        // -100 + 32768 * 200 / 65535 = 100 / 65535 = 0.00152590218967...
        let bytes = one_signal(-32768, 32767, -100.0, 100.0, vec![0]).to_bytes().unwrap();
        let (rec, _) = parse_edf(&bytes).unwrap();
        approx::assert_abs_diff_eq!(rec.samples[0][0], 100.0 / 65535.0, epsilon = 1e-12);
        approx::assert_abs_diff_eq!(rec.samples[0][0], 0.001_525_902_189_669_642, epsilon = 1e-15);
    }

    #[test]
    fn truncated_mid_record() {
        let bytes = one_signal(-100, 100, -100.0, 100.0, vec![0, 50]).to_bytes().unwrap();
        let err = EdfFile::parse(&bytes[..bytes.len() - 1]).unwrap_err();
        assert!(err.to_string().contains("truncated data record"), "{err}");
    }

    #[test]
    fn truncated_header() {
        let bytes = one_signal(-100, 100, -100.0, 100.0, vec![0]).to_bytes().unwrap();
        assert!(matches!(
            EdfFile::parse(&bytes[..300]),
            Err(Error::TruncatedHeader { .. })
        ));
        assert!(matches!(
            EdfFile::parse(&bytes[..100]),
            Err(Error::TruncatedHeader { .. })
        ));
    }

    #[test]
    fn non_numeric_field() {
        let mut bytes = one_signal(-100, 100, -100.0, 100.0, vec![0]).to_bytes().unwrap();
        bytes[236..244].copy_from_slice(b"abc     ");
        let err = EdfFile::parse(&bytes).unwrap_err();
        assert!(matches!(err, Error::InvalidHeaderField { field: "number of data records", .. }));
    }

    #[test]
    fn inverted_digital_range() {
        let f = one_signal(100, -100, -100.0, 100.0, vec![0]);
        let mut bytes = f.clone();
        bytes.header.signals[0].digital_min = -100;
        bytes.header.signals[0].digital_max = 100;
        let mut raw = bytes.to_bytes().unwrap();
        // swap the digital min/max fields: offsets 256 + 16 + 80 + 8 + 8 + 8
        let dmin_at = 256 + 16 + 80 + 8 + 8 + 8;
        raw[dmin_at..dmin_at + 8].copy_from_slice(b"100     ");
        raw[dmin_at + 8..dmin_at + 16].copy_from_slice(b"-100    ");
        assert!(matches!(
            EdfFile::parse(&raw),
            Err(Error::InvalidDigitalRange { .. })
        ));
    }

    #[test]
    fn mixed_rates_rejected_when_requested_together() {
        let mut f = one_signal(-100, 100, -100.0, 100.0, vec![1, 2]);
        let mut second = f.header.signals[0].clone();
        second.label = "F7".into();
        second.samples_per_record = 1;
        f.header.signals.push(second);
        f.digital.push(vec![3]);
        let parsed = EdfFile::parse(&f.to_bytes().unwrap()).unwrap();
        assert!(matches!(parsed.recording(None), Err(Error::MixedSampleRates { .. })));
        let only = parsed.recording(Some(&["f7".to_string()])).unwrap();
        assert_eq!(only.samples, vec![vec![3.0]]);
    }

    #[test]
    fn out_of_range_sample_rejected() {
        let rec = Recording::new(vec!["FP1".into()], vec![vec![101.0]], 1.0).unwrap();
        let header = one_signal(-100, 100, -100.0, 100.0, vec![0]).header;
        assert!(matches!(
            write_edf(&rec, &header),
            Err(Error::SampleOutOfRange { .. })
        ));
    }

    #[test]
    fn start_date_round_trips() {
        let f = one_signal(-100, 100, -100.0, 100.0, vec![0]);
        let back = EdfFile::parse(&f.to_bytes().unwrap()).unwrap();
        assert_eq!(back.header.start, f.header.start);
        assert_eq!(&f.to_bytes().unwrap()[168..184], b"04.03.1710.20.30");
    }

    #[test]
    fn number_formatting_fits_width() {
        assert_eq!(format_number(-100.0, 8, "x").unwrap(), "-100");
        assert_eq!(format_number(0.1, 8, "x").unwrap(), "0.1");
        assert_eq!(format_number(1.0 / 3.0, 8, "x").unwrap(), "0.333333");
        assert!(format_number(1e12, 8, "x").is_err());
    }
}
