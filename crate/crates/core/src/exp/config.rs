//! Flat key=value configuration files with `[section]` headers, UTF-8.
//!
//! Sections may repeat (each `[learner]` block describes one learner);
//! order is preserved. `#` and `;` start comments.

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("missing section [{0}]")]
    MissingSection(String),
    #[error("missing key {key} in section [{section}]")]
    MissingKey { section: String, key: String },
    #[error("bad value for {key}: {msg}")]
    BadValue { key: String, msg: String },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug)]
pub struct Section {
    pub name: String,
    pub entries: Vec<(String, String)>,
}

impl Section {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str, ConfigError> {
        self.get(key).ok_or_else(|| ConfigError::MissingKey {
            section: self.name.clone(),
            key: key.to_string(),
        })
    }

    pub fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| ConfigError::BadValue {
                key: key.to_string(),
                msg: format!("cannot parse {v:?}"),
            }),
        }
    }

    pub fn parse_or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError> {
        Ok(self.parse(key)?.unwrap_or(default))
    }

    /// Comma-separated list.
    pub fn parse_list<T: std::str::FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|s| {
                    s.trim().parse().map_err(|_| ConfigError::BadValue {
                        key: key.to_string(),
                        msg: format!("cannot parse list item {s:?}"),
                    })
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Config {
    pub sections: Vec<Section>,
    /// Canonicalized text the config hash is computed from.
    pub canonical: String,
}

impl Config {
    pub fn parse(text: &str) -> Result<Config, ConfigError> {
        let mut sections: Vec<Section> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or_else(|| ConfigError::Parse {
                    line: lineno + 1,
                    msg: "unterminated section header".into(),
                })?;
                sections.push(Section {
                    name: name.trim().to_string(),
                    entries: Vec::new(),
                });
            } else if let Some((k, v)) = line.split_once('=') {
                let section = sections.last_mut().ok_or_else(|| ConfigError::Parse {
                    line: lineno + 1,
                    msg: "key=value before any [section]".into(),
                })?;
                section
                    .entries
                    .push((k.trim().to_string(), v.trim().to_string()));
            } else {
                return Err(ConfigError::Parse {
                    line: lineno + 1,
                    msg: format!("expected [section] or key=value, got {line:?}"),
                });
            }
        }
        let mut canonical = String::new();
        for s in &sections {
            canonical.push_str(&format!("[{}]\n", s.name));
            for (k, v) in &s.entries {
                canonical.push_str(&format!("{k}={v}\n"));
            }
        }
        Ok(Config {
            sections,
            canonical,
        })
    }

    pub fn load(path: &std::path::Path) -> Result<Config, ConfigError> {
        Config::parse(&std::fs::read_to_string(path)?)
    }

    pub fn first(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    pub fn require(&self, name: &str) -> Result<&Section, ConfigError> {
        self.first(name)
            .ok_or_else(|| ConfigError::MissingSection(name.to_string()))
    }

    pub fn all(&self, name: &str) -> impl Iterator<Item = &Section> {
        let name = name.to_string();
        self.sections.iter().filter(move |s| s.name == name)
    }

    pub fn hash(&self) -> u64 {
        super::fnv1a64(self.canonical.as_bytes())
    }
}
