use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::CliError;

/// Resolves parameters from flags, then the `--config` file, then defaults,
/// and records every resolved value for the output header.
pub struct Resolver {
    file: Map<String, Value>,
    echo: Map<String, Value>,
}

impl Resolver {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let file = match path {
            None => Map::new(),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Validation(format!("cannot read config {}: {}", p.display(), e)))?;
                match serde_json::from_str::<Value>(&text) {
                    Ok(Value::Object(m)) => m,
                    Ok(_) => return Err(CliError::Validation("config must be a JSON object".into())),
                    Err(e) => return Err(CliError::Validation(format!("malformed config {}: {}", p.display(), e))),
                }
            }
        };
        Ok(Self { file, echo: Map::new() })
    }

    fn file_value<T: DeserializeOwned>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.file.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(v) => serde_json::from_value(v.clone())
                .map(Some)
                .map_err(|e| CliError::Validation(format!("config key `{}`: {}", key, e))),
        }
    }

    fn record<T: Serialize>(&mut self, key: &str, value: &T) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.echo.insert(key.to_string(), v);
    }

    /// Optional parameter.
    pub fn opt<T: DeserializeOwned + Serialize>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError> {
        let value = match flag {
            Some(v) => Some(v),
            None => self.file_value(key)?,
        };
        if let Some(v) = &value {
            self.record(key, v);
        }
        Ok(value)
    }

    pub fn or<T: DeserializeOwned + Serialize>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T, CliError> {
        let value = self.opt(key, flag)?.unwrap_or(default);
        self.record(key, &value);
        Ok(value)
    }

    pub fn req<T: DeserializeOwned + Serialize>(&mut self, key: &str, flag: Option<T>) -> Result<T, CliError> {
        self.opt(key, flag)?
            .ok_or_else(|| CliError::Validation(format!("missing required parameter `{}`", key)))
    }

    /// A textual descriptor; numbers in the config file are accepted as text.
    pub fn spec(&mut self, key: &str, flag: Option<String>, default: Option<&str>) -> Result<String, CliError> {
        let value = match flag {
            Some(s) => Some(s),
            None => match self.file.get(key) {
                Some(Value::String(s)) => Some(s.clone()),
                Some(Value::Number(n)) => Some(n.to_string()),
                Some(Value::Array(items)) => Some(
                    items
                        .iter()
                        .map(|v| match v {
                            Value::String(s) => s.clone(),
                            other => other.to_string(),
                        })
                        .collect::<Vec<_>>()
                        .join(","),
                ),
                None | Some(Value::Null) => None,
                Some(_) => return Err(CliError::Validation(format!("config key `{}` must be text or numbers", key))),
            },
        }
        .or_else(|| default.map(str::to_string))
        .ok_or_else(|| CliError::Validation(format!("missing required parameter `{}`", key)))?;
        self.record(key, &value);
        Ok(value)
    }

    pub fn opt_spec(&mut self, key: &str, flag: Option<String>) -> Result<Option<String>, CliError> {
        if flag.is_none() && matches!(self.file.get(key), None | Some(Value::Null)) {
            return Ok(None);
        }
        self.spec(key, flag, None).map(Some)
    }

    pub fn echo(&self) -> &Map<String, Value> {
        &self.echo
    }
}
