//! Project template and naming conventions.
//!
//! A scaffolded project looks like this:
//!
//! ```text
//! <root>/
//!   TFP/
//!     app.id                      application identity (app_id=..., user_name=...)
//!     tfp.conf                    optional key=value overrides
//!     MasterPerformance.xml       master suite script
//!     Critical/
//!       <ServiceName>Performance.xml
//! ```
//!
//! The critical script of a service file is found by name alone, so no
//! per-service configuration is needed.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use uuid::Uuid;

use crate::model::{
    AdaptiveParams, ApplicationIdentity, LoadProfile, ModelError, PerformanceCriteria, TestCase,
};
use crate::validator::{render_script, TestScript};

pub const TFP_DIR: &str = "TFP";
pub const CONF_PATH: &str = "TFP/tfp.conf";
pub const DEFAULT_CRITICAL_DIR: &str = "TFP/Critical";
pub const DEFAULT_MASTER_PATH: &str = "TFP/MasterPerformance.xml";
pub const DEFAULT_SCRIPT_SUFFIX: &str = "Performance.xml";
pub const DEFAULT_APP_ID_PATH: &str = "TFP/app.id";
pub const PLACEHOLDER_BASE_URL: &str = "http://localhost:8080";

#[derive(Debug, thiserror::Error)]
pub enum ConventionError {
    #[error("E_BAD_CONFIG: {path}:{line}: {reason}")]
    BadConfig {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("E_ESCAPES_ROOT: {key}={value} resolves outside the project root")]
    EscapesRoot { key: String, value: String },
    #[error("E_EMPTY_STEM: {0} has no file stem")]
    EmptyStem(String),
    #[error("E_ALREADY_SCAFFOLDED: {0} already exists")]
    AlreadyScaffolded(PathBuf),
    #[error("E_IO: {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("invalid identity in {path}: {reason}")]
    BadIdentity { path: PathBuf, reason: String },
    #[error(transparent)]
    Identity(#[from] ModelError),
}

impl ConventionError {
    pub fn code(&self) -> &'static str {
        match self {
            ConventionError::BadConfig { .. } => "E_BAD_CONFIG",
            ConventionError::EscapesRoot { .. } => "E_ESCAPES_ROOT",
            ConventionError::EmptyStem(_) => "E_EMPTY_STEM",
            ConventionError::AlreadyScaffolded(_) => "E_ALREADY_SCAFFOLDED",
            ConventionError::Io { .. } => "E_IO",
            ConventionError::BadIdentity { .. } => "E_BAD_IDENTITY",
            ConventionError::Identity(ModelError::EmptyUserName) => "E_EMPTY_USERNAME",
            ConventionError::Identity(_) => "E_BAD_IDENTITY",
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> ConventionError + '_ {
    move |source| ConventionError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Where things live inside a project. Relative paths use `/` separators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectLayout {
    pub root: PathBuf,
    pub critical_dir: String,
    pub master_path: String,
    pub script_suffix: String,
    pub app_id_path: String,
}

impl ProjectLayout {
    pub fn defaults(root: impl Into<PathBuf>) -> Self {
        ProjectLayout {
            root: root.into(),
            critical_dir: DEFAULT_CRITICAL_DIR.into(),
            master_path: DEFAULT_MASTER_PATH.into(),
            script_suffix: DEFAULT_SCRIPT_SUFFIX.into(),
            app_id_path: DEFAULT_APP_ID_PATH.into(),
        }
    }

    pub fn resolve(&self, relative: &str) -> PathBuf {
        relative
            .split('/')
            .filter(|s| !s.is_empty())
            .fold(self.root.clone(), |p, seg| p.join(seg))
    }

    pub fn critical_path(&self) -> PathBuf {
        self.resolve(&self.critical_dir)
    }

    pub fn master_file(&self) -> PathBuf {
        self.resolve(&self.master_path)
    }

    pub fn app_id_file(&self) -> PathBuf {
        self.resolve(&self.app_id_path)
    }
}

/// Layout plus the remaining settings of `tfp.conf`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectConfig {
    pub layout: ProjectLayout,
    pub service_url: Option<String>,
    pub warnings: Vec<String>,
}

/// Lexically normalizes a relative path, failing when it leaves the root.
fn contain(key: &str, value: &str) -> Result<String, ConventionError> {
    let escapes = || ConventionError::EscapesRoot {
        key: key.to_string(),
        value: value.to_string(),
    };
    let unified = value.replace('\\', "/");
    if unified.starts_with('/') || unified.chars().nth(1) == Some(':') {
        return Err(escapes());
    }
    let mut parts: Vec<&str> = Vec::new();
    for seg in unified.split('/') {
        match seg {
            "" | "." => {}
            ".." => {
                parts.pop().ok_or_else(escapes)?;
            }
            s => parts.push(s),
        }
    }
    Ok(parts.join("/"))
}

/// Parses `key=value` lines. Blank lines and `#` comments are skipped.
pub fn parse_conf(path: &Path, text: &str) -> Result<Vec<(usize, String, String)>, ConventionError> {
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |reason: &str| ConventionError::BadConfig {
            path: path.to_path_buf(),
            line: i + 1,
            reason: reason.to_string(),
        };
        let (k, v) = line.split_once('=').ok_or_else(|| bad("expected key=value"))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(bad("empty key"));
        }
        if v.is_empty() {
            return Err(bad("empty value"));
        }
        entries.push((i + 1, k.to_string(), v.to_string()));
    }
    Ok(entries)
}

/// Reads `<root>/TFP/tfp.conf` if present and merges it onto the defaults.
pub fn load_config(root: &Path) -> Result<ProjectConfig, ConventionError> {
    let mut layout = ProjectLayout::defaults(root);
    let mut service_url = None;
    let mut warnings = Vec::new();
    let conf = layout.resolve(CONF_PATH);
    let text = match fs::read_to_string(&conf) {
        Ok(t) => t,
        Err(e) if e.kind() == io::ErrorKind::NotFound => String::new(),
        Err(e) => return Err(io_err(&conf)(e)),
    };
    for (line, key, value) in parse_conf(&conf, &text)? {
        match key.as_str() {
            "critical_dir" => layout.critical_dir = contain(&key, &value)?,
            "master_path" => {
                let p = contain(&key, &value)?;
                if p.is_empty() {
                    return Err(ConventionError::BadConfig {
                        path: conf,
                        line,
                        reason: "master_path must name a file".into(),
                    });
                }
                layout.master_path = p;
            }
            "script_suffix" => {
                if value.contains(['/', '\\']) {
                    return Err(ConventionError::EscapesRoot { key, value });
                }
                layout.script_suffix = value;
            }
            "service_url" => service_url = Some(value),
            _ => warnings.push(format!("{}:{line}: unknown key {key:?} ignored", conf.display())),
        }
    }
    Ok(ProjectConfig {
        layout,
        service_url,
        warnings,
    })
}

pub fn load_layout(root: &Path) -> Result<ProjectLayout, ConventionError> {
    Ok(load_config(root)?.layout)
}

/// Service name of a source file: its file name minus the last extension.
pub fn service_name(service_file: &Path) -> Result<String, ConventionError> {
    let text = service_file.to_string_lossy();
    let file_name = text.rsplit(['/', '\\']).next().unwrap_or_default();
    let stem = match file_name.rsplit_once('.') {
        Some((stem, _)) => stem,
        None => file_name,
    };
    if stem.is_empty() {
        return Err(ConventionError::EmptyStem(text.into_owned()));
    }
    Ok(stem.to_string())
}

/// `<root>/<critical_dir>/<ServiceName><script_suffix>`
pub fn resolve_critical(service_file: &Path, layout: &ProjectLayout) -> Result<PathBuf, ConventionError> {
    let name = service_name(service_file)?;
    Ok(layout
        .critical_path()
        .join(format!("{name}{}", layout.script_suffix)))
}

pub fn critical_template(service_name: &str) -> String {
    render_script(&TestScript {
        case: TestCase::get(format!("{PLACEHOLDER_BASE_URL}/{service_name}")),
        criteria: template_criteria(),
        load: None,
        adaptive: None,
    })
}

pub fn master_template() -> String {
    render_script(&TestScript {
        case: TestCase::get(format!("{PLACEHOLDER_BASE_URL}/")),
        criteria: template_criteria(),
        load: Some(LoadProfile::default()),
        adaptive: Some(AdaptiveParams::default()),
    })
}

fn template_criteria() -> PerformanceCriteria {
    PerformanceCriteria {
        response_ms: 1000.0,
        tps: 1.0,
        bps: 8.0,
    }
}

pub fn format_identity(id: &ApplicationIdentity) -> String {
    format!("app_id={}\nuser_name={}\n", id.app_id.hyphenated(), id.user_name)
}

pub fn parse_identity(path: &Path, text: &str) -> Result<ApplicationIdentity, ConventionError> {
    let bad = |reason: String| ConventionError::BadIdentity {
        path: path.to_path_buf(),
        reason,
    };
    let mut app_id = None;
    let mut user_name = None;
    for (_, key, value) in parse_conf(path, text)? {
        match key.as_str() {
            "app_id" => {
                let id = Uuid::parse_str(&value).map_err(|e| bad(e.to_string()))?;
                if id.hyphenated().to_string() != value {
                    return Err(bad("app_id must be lowercase hyphenated".into()));
                }
                app_id = Some(id);
            }
            "user_name" => user_name = Some(value),
            other => return Err(bad(format!("unexpected key {other:?}"))),
        }
    }
    let id = ApplicationIdentity {
        app_id: app_id.ok_or_else(|| bad("missing app_id".into()))?,
        user_name: user_name.ok_or_else(|| bad("missing user_name".into()))?,
    };
    id.validate().map_err(|e| bad(e.to_string()))?;
    Ok(id)
}

pub fn read_identity(layout: &ProjectLayout) -> Result<ApplicationIdentity, ConventionError> {
    let path = layout.app_id_file();
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    parse_identity(&path, &text)
}

/// Creates the template under `root`. Fails if `root/TFP` already exists.
pub fn scaffold_project(root: &Path, user_name: &str) -> Result<ProjectLayout, ConventionError> {
    let identity = ApplicationIdentity::generate(user_name)?;
    if !root.is_dir() {
        return Err(io_err(root)(io::Error::new(
            io::ErrorKind::NotFound,
            "project root is not a directory",
        )));
    }
    let layout = ProjectLayout::defaults(root);
    let tfp = layout.resolve(TFP_DIR);
    if tfp.exists() {
        return Err(ConventionError::AlreadyScaffolded(tfp));
    }
    fs::create_dir(&tfp).map_err(io_err(&tfp))?;
    let critical = layout.critical_path();
    fs::create_dir_all(&critical).map_err(io_err(&critical))?;
    let master = layout.master_file();
    fs::write(&master, master_template()).map_err(io_err(&master))?;
    let app_id = layout.app_id_file();
    fs::write(&app_id, format_identity(&identity)).map_err(io_err(&app_id))?;
    Ok(layout)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::validator::validate_script;

    #[test]
    fn critical_names() {
        let layout = ProjectLayout::defaults("");
        assert_eq!(
            resolve_critical(Path::new("src/BookSearch.svc"), &layout).unwrap(),
            PathBuf::from("TFP/Critical/BookSearchPerformance.xml")
        );
        assert_eq!(
            resolve_critical(Path::new("a/b/x.y.z"), &layout).unwrap(),
            PathBuf::from("TFP/Critical/x.yPerformance.xml")
        );
        assert_eq!(
            resolve_critical(Path::new("a\\b\\Orders.java"), &layout).unwrap(),
            PathBuf::from("TFP/Critical/OrdersPerformance.xml")
        );
        assert_eq!(service_name(Path::new("Makefile")).unwrap(), "Makefile");
        let err = resolve_critical(Path::new(".gitignore"), &layout).unwrap_err();
        assert_eq!(err.code(), "E_EMPTY_STEM");
    }

    #[test]
    fn containment() {
        assert_eq!(contain("k", "perf/critical").unwrap(), "perf/critical");
        assert_eq!(contain("k", "./a/../b\\c").unwrap(), "b/c");
        assert!(contain("k", "../outside").is_err());
        assert!(contain("k", "a/../../x").is_err());
        assert!(contain("k", "/etc").is_err());
        assert!(contain("k", "C:\\x").is_err());
    }

    #[test]
    fn conf_parsing() {
        let p = Path::new("tfp.conf");
        let entries = parse_conf(p, "# comment\n\ncritical_dir = perf/critical\n").unwrap();
        assert_eq!(entries, vec![(3, "critical_dir".into(), "perf/critical".into())]);
        match parse_conf(p, "a=b\nnonsense\n").unwrap_err() {
            ConventionError::BadConfig { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn templates_are_valid_scripts() {
        assert_eq!(validate_script(&critical_template("BookSearch")), vec![]);
        assert_eq!(validate_script(&master_template()), vec![]);
        assert!(critical_template("BookSearch").contains("http://localhost:8080/BookSearch"));
    }

    #[test]
    fn identity_text_round_trip() {
        let id = ApplicationIdentity::generate("carol").unwrap();
        let back = parse_identity(Path::new("app.id"), &format_identity(&id)).unwrap();
        assert_eq!(back, id);
        assert!(parse_identity(Path::new("app.id"), "user_name=x\n").is_err());
    }
}
