//! Sample and dataset model, the canonical text format, and the three
//! train/validation split constructors.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const MAGIC: &str = "cod2m-dataset v1";

/// Default C3 region boundary (mm along y). Puts the IED at y=250 on the
/// training side and the ones at y=600 and y=850 on the validation side.
pub const DEFAULT_C3_BOUNDARY: f64 = 550.0;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("sample {id}: {reason}")]
    InvalidSample { id: u64, reason: String },
    #[error("duplicate sample id {0}")]
    DuplicateId(u64),
    #[error("dataset has no {0} samples")]
    MissingClass(ClassLabel),
    #[error("split needs day {0} samples but none are present")]
    MissingDay(u8),
    #[error("{set} set has no {missing} samples")]
    Stratification { set: &'static str, missing: ClassLabel },
    #[error("invalid header: {0}")]
    Header(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// The two classes, named for error reporting.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClassLabel {
    Ied,
    NonIed,
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassLabel::Ied => f.write_str("IED"),
            ClassLabel::NonIed => f.write_str("non-IED"),
        }
    }
}

/// The sensor carried by one agent. The declaration order is the canonical
/// agent order used everywhere (B vectors, tie-breaks, file columns).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SensorKind {
    #[serde(rename = "VS")]
    Vs,
    #[serde(rename = "IR")]
    Ir,
    #[serde(rename = "UV")]
    Uv,
    #[serde(rename = "TM")]
    Tm,
    #[serde(rename = "GP")]
    Gp,
}

impl SensorKind {
    pub const ALL: [SensorKind; 5] = [SensorKind::Vs, SensorKind::Ir, SensorKind::Uv, SensorKind::Tm, SensorKind::Gp];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            SensorKind::Vs => "VS",
            SensorKind::Ir => "IR",
            SensorKind::Uv => "UV",
            SensorKind::Tm => "TM",
            SensorKind::Gp => "GP",
        }
    }
}

impl fmt::Display for SensorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SensorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SensorKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| format!("unknown sensor kind `{s}`"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeOfDay {
    Morning,
    Afternoon,
}

impl TimeOfDay {
    pub fn name(self) -> &'static str {
        match self {
            TimeOfDay::Morning => "morning",
            TimeOfDay::Afternoon => "afternoon",
        }
    }
}

impl FromStr for TimeOfDay {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "morning" => Ok(TimeOfDay::Morning),
            "afternoon" => Ok(TimeOfDay::Afternoon),
            _ => Err(format!("unknown time of day `{s}`")),
        }
    }
}

/// Acquisition conditions of one campaign day.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Condition {
    pub day: u8,
    pub illumination: f64,
    pub humidity: f64,
    pub time_of_day: TimeOfDay,
}

impl Condition {
    /// Dry morning of the first day.
    pub fn day_one() -> Self {
        Condition { day: 1, illumination: 0.9, humidity: 0.3, time_of_day: TimeOfDay::Morning }
    }

    /// Drizzly afternoon of the second day.
    pub fn day_two() -> Self {
        Condition { day: 2, illumination: 0.45, humidity: 0.9, time_of_day: TimeOfDay::Afternoon }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.day != 1 && self.day != 2 {
            return Err(format!("day must be 1 or 2, got {}", self.day));
        }
        if !unit(self.illumination) {
            return Err(format!("illumination {} outside [0,1]", self.illumination));
        }
        if !unit(self.humidity) {
            return Err(format!("humidity {} outside [0,1]", self.humidity));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Self {
        Position { x, y }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Normalized sensor reading; every component lies in [0,1].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub id: u64,
    pub position: Position,
    pub condition: Condition,
    /// One vector per sensor, indexed by `SensorKind::index`.
    pub features: [FeatureVector; 5],
    /// `true` when an IED lies at/under this position.
    pub label: bool,
}

impl Sample {
    pub fn feature(&self, kind: SensorKind) -> &FeatureVector {
        &self.features[kind.index()]
    }

    pub fn target(&self) -> f64 {
        if self.label {
            1.0
        } else {
            0.0
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Header {
    pub dims: [usize; 5],
    pub width: f64,
    pub height: f64,
}

impl Header {
    pub fn new(dims: [usize; 5], width: f64, height: f64) -> Self {
        Header { dims, width, height }
    }

    pub fn dim(&self, kind: SensorKind) -> usize {
        self.dims[kind.index()]
    }

    fn validate(&self) -> Result<(), DatasetError> {
        if self.dims.contains(&0) {
            return Err(DatasetError::Header("feature dimensions must be positive".into()));
        }
        if !(self.width > 0.0 && self.height > 0.0 && self.width.is_finite() && self.height.is_finite()) {
            return Err(DatasetError::Header(format!(
                "terrain {}x{} is not a positive finite size",
                self.width, self.height
            )));
        }
        Ok(())
    }
}

impl Default for Header {
    fn default() -> Self {
        Header { dims: [4; 5], width: 670.0, height: 1100.0 }
    }
}

/// A validated, immutable collection of samples.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    header: Header,
    samples: Vec<Sample>,
}

impl Dataset {
    /// Builds a dataset, checking every sample against the header and
    /// requiring both classes.
    pub fn new(header: Header, samples: Vec<Sample>) -> Result<Self, DatasetError> {
        header.validate()?;
        let mut ids = BTreeSet::new();
        for s in &samples {
            if !ids.insert(s.id) {
                return Err(DatasetError::DuplicateId(s.id));
            }
            check_sample(&header, s).map_err(|reason| DatasetError::InvalidSample { id: s.id, reason })?;
        }
        if let Some(missing) = missing_class(&samples) {
            return Err(DatasetError::MissingClass(missing));
        }
        Ok(Dataset { header, samples })
    }

    pub fn header(&self) -> &Header {
        &self.header
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn ids(&self) -> BTreeSet<u64> {
        self.samples.iter().map(|s| s.id).collect()
    }

    pub fn labels(&self) -> Vec<bool> {
        self.samples.iter().map(|s| s.label).collect()
    }

    pub fn positives(&self) -> usize {
        self.samples.iter().filter(|s| s.label).count()
    }
}

fn unit(v: f64) -> bool {
    v.is_finite() && (0.0..=1.0).contains(&v)
}

fn check_sample(header: &Header, s: &Sample) -> Result<(), String> {
    s.condition.validate()?;
    let Position { x, y } = s.position;
    if !(x.is_finite() && y.is_finite() && (0.0..=header.width).contains(&x) && (0.0..=header.height).contains(&y)) {
        return Err(format!("position ({x}, {y}) outside terrain {}x{}", header.width, header.height));
    }
    for kind in SensorKind::ALL {
        let fv = s.feature(kind);
        if fv.len() != header.dim(kind) {
            return Err(format!("{kind} vector has length {}, header declares {}", fv.len(), header.dim(kind)));
        }
        if let Some(v) = fv.values().iter().find(|v| !unit(**v)) {
            return Err(format!("{kind} feature {v} outside [0,1]"));
        }
    }
    Ok(())
}

fn missing_class(samples: &[Sample]) -> Option<ClassLabel> {
    if !samples.iter().any(|s| s.label) {
        Some(ClassLabel::Ied)
    } else if !samples.iter().any(|s| !s.label) {
        Some(ClassLabel::NonIed)
    } else {
        None
    }
}

/// How samples are divided between training and validation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SplitCase {
    /// Day 1 trains, day 2 validates.
    C1,
    /// Day 2 trains, day 1 validates.
    C2,
    /// Both days, split spatially: `y < boundary` trains.
    C3 { boundary: f64 },
}

impl SplitCase {
    pub fn name(&self) -> &'static str {
        match self {
            SplitCase::C1 => "C1",
            SplitCase::C2 => "C2",
            SplitCase::C3 { .. } => "C3",
        }
    }

    pub fn c3() -> Self {
        SplitCase::C3 { boundary: DEFAULT_C3_BOUNDARY }
    }

    pub fn all() -> [SplitCase; 3] {
        [SplitCase::C1, SplitCase::C2, SplitCase::c3()]
    }
}

impl fmt::Display for SplitCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SplitCase {
    type Err = String;

    /// Accepts `C1`, `C2`, `C3` (default boundary) or `C3@<mm>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "C1" => Ok(SplitCase::C1),
            "C2" => Ok(SplitCase::C2),
            "C3" => Ok(SplitCase::c3()),
            other => match other.strip_prefix("C3@") {
                Some(b) => b
                    .parse::<f64>()
                    .map(|boundary| SplitCase::C3 { boundary })
                    .map_err(|e| format!("bad C3 boundary `{b}`: {e}")),
                None => Err(format!("unknown split case `{other}`")),
            },
        }
    }
}

/// Partitions `dataset` into `(train, validation)` for the given case.
pub fn split(dataset: &Dataset, case: SplitCase) -> Result<(Dataset, Dataset), DatasetError> {
    let in_train = |s: &Sample| match case {
        SplitCase::C1 => s.condition.day == 1,
        SplitCase::C2 => s.condition.day == 2,
        SplitCase::C3 { boundary } => s.position.y < boundary,
    };
    if matches!(case, SplitCase::C1 | SplitCase::C2) {
        for day in [1u8, 2] {
            if !dataset.samples.iter().any(|s| s.condition.day == day) {
                return Err(DatasetError::MissingDay(day));
            }
        }
    }
    let (train, validation): (Vec<Sample>, Vec<Sample>) = dataset.samples.iter().cloned().partition(|s| in_train(s));
    for (set, samples) in [("train", &train), ("validation", &validation)] {
        if let Some(missing) = missing_class(samples) {
            return Err(DatasetError::Stratification { set, missing });
        }
    }
    Ok((
        Dataset { header: dataset.header.clone(), samples: train },
        Dataset { header: dataset.header.clone(), samples: validation },
    ))
}

/// 17 significant digits: enough for every f64 to survive a text round trip.
pub(crate) fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_extent(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        fmt_real(v)
    }
}

pub fn save_dataset(dataset: &Dataset, path: impl AsRef<Path>) -> Result<(), DatasetError> {
    let file = fs::File::create(path)?;
    let mut out = BufWriter::new(file);
    write_dataset(dataset, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn write_dataset(dataset: &Dataset, out: &mut impl Write) -> io::Result<()> {
    let h = &dataset.header;
    writeln!(out, "{MAGIC}")?;
    write!(out, "dims")?;
    for kind in SensorKind::ALL {
        write!(out, " {}={}", kind, h.dim(kind))?;
    }
    writeln!(out, " terrain={}x{}", fmt_extent(h.width), fmt_extent(h.height))?;
    for s in &dataset.samples {
        let c = &s.condition;
        write!(
            out,
            "{},{},{},{},{},{},{},{}",
            s.id,
            c.day,
            c.time_of_day.name(),
            fmt_real(c.illumination),
            fmt_real(c.humidity),
            fmt_real(s.position.x),
            fmt_real(s.position.y),
            u8::from(s.label)
        )?;
        for kind in SensorKind::ALL {
            let vals: Vec<String> = s.feature(kind).values().iter().map(|v| fmt_real(*v)).collect();
            write!(out, ",{}:{}", kind, vals.join(";"))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset, DatasetError> {
    let text = fs::read_to_string(path)?;
    parse_dataset(&text)
}

pub fn parse_dataset(text: &str) -> Result<Dataset, DatasetError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let perr = |line: usize, msg: String| DatasetError::Parse { line, msg };

    match lines.next() {
        Some((_, l)) if l.trim_end() == MAGIC => {}
        Some((n, l)) => return Err(perr(n, format!("expected `{MAGIC}`, found `{l}`"))),
        None => return Err(perr(1, "empty file".into())),
    }
    let (n, header_line) = lines.next().ok_or_else(|| perr(2, "missing header line".into()))?;
    let header = parse_header(header_line).map_err(|m| perr(n, m))?;

    let mut samples = Vec::new();
    for (n, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        samples.push(parse_record(line).map_err(|m| perr(n, m))?);
    }
    Dataset::new(header, samples)
}

fn parse_header(line: &str) -> Result<Header, String> {
    let mut tokens = line.split_whitespace();
    if tokens.next() != Some("dims") {
        return Err("header must start with `dims`".into());
    }
    let mut dims = [0usize; 5];
    for kind in SensorKind::ALL {
        let tok = tokens.next().ok_or_else(|| format!("missing {kind} dimension"))?;
        let val = tok
            .strip_prefix(kind.name())
            .and_then(|r| r.strip_prefix('='))
            .ok_or_else(|| format!("expected `{kind}=<n>`, found `{tok}`"))?;
        dims[kind.index()] = val.parse().map_err(|e| format!("bad {kind} dimension `{val}`: {e}"))?;
    }
    let tok = tokens.next().ok_or("missing terrain")?;
    let extent = tok.strip_prefix("terrain=").ok_or_else(|| format!("expected `terrain=WxH`, found `{tok}`"))?;
    let (w, h) = extent.split_once('x').ok_or_else(|| format!("bad terrain `{extent}`"))?;
    let width = w.parse().map_err(|e| format!("bad terrain width `{w}`: {e}"))?;
    let height = h.parse().map_err(|e| format!("bad terrain height `{h}`: {e}"))?;
    if let Some(extra) = tokens.next() {
        return Err(format!("unknown header field `{extra}`"));
    }
    Ok(Header { dims, width, height })
}

fn num<T: FromStr>(field: &str, what: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    field.trim().parse().map_err(|e| format!("bad {what} `{field}`: {e}"))
}

fn parse_record(line: &str) -> Result<Sample, String> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != 13 {
        return Err(format!("expected 13 comma-separated fields, found {}", fields.len()));
    }
    let id: u64 = num(fields[0], "id")?;
    let ctx = |m: String| format!("sample {id}: {m}");
    let day: u8 = num(fields[1], "day").map_err(ctx)?;
    let time_of_day = fields[2].parse::<TimeOfDay>().map_err(ctx)?;
    let illumination = num(fields[3], "illumination").map_err(ctx)?;
    let humidity = num(fields[4], "humidity").map_err(ctx)?;
    let x = num(fields[5], "x").map_err(ctx)?;
    let y = num(fields[6], "y").map_err(ctx)?;
    let label = match fields[7].trim() {
        "0" => false,
        "1" => true,
        other => return Err(ctx(format!("label must be 0 or 1, found `{other}`"))),
    };
    let mut features: [FeatureVector; 5] = Default::default();
    for kind in SensorKind::ALL {
        let field = fields[8 + kind.index()];
        let body = field
            .strip_prefix(kind.name())
            .and_then(|r| r.strip_prefix(':'))
            .ok_or_else(|| ctx(format!("expected `{kind}:...`, found `{field}`")))?;
        let values = body.split(';').map(|v| num::<f64>(v, "feature")).collect::<Result<Vec<_>, _>>().map_err(ctx)?;
        features[kind.index()] = FeatureVector(values);
    }
    Ok(Sample {
        id,
        position: Position { x, y },
        condition: Condition { day, illumination, humidity, time_of_day },
        features,
        label,
    })
}
