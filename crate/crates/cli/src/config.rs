use std::fmt;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::args::Command;

/// Exit 2 for bad input, 1 for everything else.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Runtime(String),
}

impl Failure {
    pub fn usage(msg: impl Into<String>) -> Self {
        Self::Usage(msg.into())
    }

    pub fn code(&self) -> u8 {
        match self {
            Self::Usage(_) => 2,
            Self::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Usage(m) | Self::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<utilgasp::Error> for Failure {
    fn from(e: utilgasp::Error) -> Self {
        if e.is_validation() {
            Self::Usage(e.to_string())
        } else {
            Self::Runtime(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::Runtime(e.to_string())
    }
}

pub type Outcome<T = ()> = std::result::Result<T, Failure>;

/// Reads a config file: an object keyed by subcommand name.
pub fn load(path: &Path) -> Outcome<Value> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let Value::Object(map) = &value else {
        return Err(Failure::usage(format!("{}: expected a JSON object", path.display())));
    };
    if let Some(k) = map.keys().find(|k| !Command::NAMES.contains(&k.as_str())) {
        return Err(Failure::usage(format!("{}: unknown section '{k}'", path.display())));
    }
    Ok(value)
}

/// Fills every flag left unset from the command's config section.
pub fn merge<T: Serialize + DeserializeOwned>(flags: T, config: Option<&Value>, command: &str) -> Outcome<T> {
    let Some(section) = config.and_then(|c| c.get(command)) else {
        return Ok(flags);
    };
    let Value::Object(given) = section else {
        return Err(Failure::usage(format!("config section '{command}' must be an object")));
    };
    let mut merged = serde_json::to_value(&flags).map_err(|e| Failure::Runtime(e.to_string()))?;
    let slots = merged.as_object_mut().expect("flags serialize to an object");
    for (key, value) in given {
        match slots.get_mut(key) {
            None => return Err(Failure::usage(format!("unknown config key '{command}.{key}'"))),
            Some(slot) if slot.is_null() => *slot = value.clone(),
            Some(_) => {}
        }
    }
    serde_json::from_value(merged).map_err(|e| Failure::usage(format!("config section '{command}': {e}")))
}

/// Prints the effective settings as one JSON line on stderr.
pub fn announce<T: Serialize>(command: &str, settings: &T) {
    let json = serde_json::to_string(settings).unwrap_or_default();
    eprintln!("utilgasp {} {command} {json}", env!("CARGO_PKG_VERSION"));
}
