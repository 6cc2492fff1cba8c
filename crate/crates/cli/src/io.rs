//! Input parsing and artifact emission.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use rikit::metric::{CurveFamily, Mms};
use rikit::rearrange::{GridFn, WeightedSamples};
use rikit::spaces::{shorthand, NormSpec};
use rikit::{Error, Ext};
use serde::Serialize;
use serde_json::Value;

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug)]
pub enum CliError {
    Lib(Error),
    Usage(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> CliError {
        CliError::Lib(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Lib(Error::BudgetExhausted { .. } | Error::SolverStall { .. }) => 3,
            _ => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Usage(m) => write!(f, "{m}"),
        }
    }
}

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn read_json(path: &Path) -> CliResult<Value> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn from_value<T: serde::de::DeserializeOwned>(v: Value, what: &str) -> CliResult<T> {
    serde_json::from_value(v).map_err(|e| usage(format!("bad {what}: {e}")))
}

/// Shorthand such as `lorentz:3,1`, or a path to a JSON spec.
pub fn norm_spec(text: &str) -> CliResult<NormSpec> {
    let path = Path::new(text);
    if path.is_file() {
        return from_value(read_json(path)?, "space spec");
    }
    Ok(shorthand::parse(text)?)
}

pub enum Profile {
    Samples(WeightedSamples),
    Steps(GridFn),
}

/// `{"values", "weights"}` samples or a `{"breakpoints", "values", "tail"}` step function.
pub fn profile(path: &Path) -> CliResult<Profile> {
    let v = read_json(path)?;
    if v.get("breakpoints").is_some() {
        Ok(Profile::Steps(from_value(v, "step function")?))
    } else {
        Ok(Profile::Samples(from_value(v, "weighted samples")?))
    }
}

/// A JSON array of numbers, or an object with a `values` array.
pub fn point_values(path: &Path) -> CliResult<Vec<f64>> {
    #[derive(serde::Deserialize)]
    struct Wrapped(#[serde(with = "rikit::ext::vec")] Vec<f64>);
    let v = read_json(path)?;
    let arr = match v {
        Value::Object(mut m) => m.remove("values").ok_or_else(|| usage(format!("{}: missing values", path.display())))?,
        other => other,
    };
    Ok(from_value::<Wrapped>(arr, "point values")?.0)
}

/// A space from a JSON file or a generator such as `grid:3,4`.
pub fn space(text: &str) -> CliResult<Mms> {
    let path = Path::new(text);
    if path.is_file() {
        return from_value(read_json(path)?, "space");
    }
    Ok(Mms::generate(text)?)
}

/// `shortest`, `subpaths`, `pairs`, `empty`, `khop:K`, or a JSON file of vertex lists.
pub fn family(space: &Mms, text: &str) -> CliResult<CurveFamily> {
    Ok(match text {
        "shortest" => CurveFamily::shortest_paths(space)?,
        "subpaths" => CurveFamily::shortest_paths(space)?.with_subcurves(),
        "pairs" => CurveFamily::pairs(space),
        "empty" => CurveFamily::empty(),
        t => match t.strip_prefix("khop:") {
            Some(k) => CurveFamily::k_hop(space, k.parse().map_err(|_| usage(format!("bad hop count {k:?}")))?)?,
            None => {
                let lists: Vec<Vec<usize>> = from_value(read_json(Path::new(t))?, "curve family")?;
                CurveFamily::explicit(space, lists)?
            }
        },
    })
}

pub fn index_list(text: &str) -> CliResult<Vec<usize>> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse().map_err(|_| usage(format!("bad index {s:?}"))))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Plot-ready rows with a header.
#[derive(Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Table {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> CliResult<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| usage(format!("csv: {e}"));
        w.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| usage(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

pub fn cell(x: impl Display) -> String {
    x.to_string()
}

pub fn ext_cell(x: f64) -> String {
    Ext::from_f64(x).to_string()
}

/// One named output, available as JSON, CSV or both.
pub struct Artifact {
    pub name: String,
    pub json: Option<String>,
    pub table: Option<Table>,
}

impl Artifact {
    pub fn new(name: &str) -> Artifact {
        Artifact { name: name.to_string(), json: None, table: None }
    }

    pub fn json(mut self, value: &impl Serialize) -> CliResult<Artifact> {
        self.json = Some(serde_json::to_string_pretty(value).map_err(|e| usage(format!("json: {e}")))?);
        Ok(self)
    }

    pub fn table(mut self, t: Table) -> Artifact {
        self.table = Some(t);
        self
    }
}

/// Writes every representation into `out` when given; otherwise prints the
/// first artifact in the requested format (falling back to the other one).
pub fn emit(artifacts: &[Artifact], format: Format, out: Option<&PathBuf>) -> CliResult<()> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| usage(format!("cannot create {}: {e}", dir.display())))?;
            for a in artifacts {
                if let Some(j) = &a.json {
                    write(&dir.join(format!("{}.json", a.name)), &format!("{j}\n"))?;
                }
                if let Some(t) = &a.table {
                    write(&dir.join(format!("{}.csv", a.name)), &t.to_csv()?)?;
                }
            }
        }
        None => {
            let a = &artifacts[0];
            let text = match (format, &a.json, &a.table) {
                (Format::Json, Some(j), _) | (Format::Csv, Some(j), None) => format!("{j}\n"),
                (_, _, Some(t)) => t.to_csv()?,
                (_, None, None) => String::new(),
            };
            print!("{text}");
        }
    }
    Ok(())
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))
}
