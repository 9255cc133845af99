use std::any::Any;
use std::rc::Rc;

use crate::error::{Error, Result};

/// `*` matches any (possibly empty) substring; every other character is literal.
pub fn glob_match(pattern: &str, text: &str) -> bool {
    let p = pattern.as_bytes();
    let t = text.as_bytes();
    let (mut pi, mut ti) = (0, 0);
    let mut star: Option<(usize, usize)> = None;
    while ti < t.len() {
        if pi < p.len() && p[pi] == b'*' {
            star = Some((pi, ti));
            pi += 1;
        } else if pi < p.len() && p[pi] == t[ti] {
            pi += 1;
            ti += 1;
        } else if let Some((sp, st)) = star {
            pi = sp + 1;
            ti = st + 1;
            star = Some((sp, st + 1));
        } else {
            return false;
        }
    }
    p[pi..].iter().all(|&c| c == b'*')
}

struct Entry {
    glob: String,
    key: String,
    value: Rc<dyn Any>,
}

/// Hierarchical key/value store. Values are shared handles; a lookup sees
/// the most recent `set` whose glob matches the requesting path.
#[derive(Default)]
pub struct ConfigDb {
    entries: Vec<Entry>,
}

impl ConfigDb {
    pub fn new() -> Self {
        Self::default()
    }

    /// With a context path the effective glob is `context.glob`
    /// (or just `context` when `glob` is empty).
    pub fn set<T: Any>(&mut self, context: Option<&str>, glob: &str, key: &str, value: T) -> Result<()> {
        self.set_shared(context, glob, key, Rc::new(value))
    }

    pub fn set_shared(&mut self, context: Option<&str>, glob: &str, key: &str, value: Rc<dyn Any>) -> Result<()> {
        if key.is_empty() {
            return Err(Error::Config("ConfigDB key must not be empty".into()));
        }
        let glob = match context {
            Some(ctx) if glob.is_empty() => ctx.to_string(),
            Some(ctx) => format!("{ctx}.{glob}"),
            None => glob.to_string(),
        };
        self.entries.push(Entry {
            glob,
            key: key.to_string(),
            value,
        });
        Ok(())
    }

    /// Looks up `key` for `path.inst` (or `path` when `inst` is empty).
    pub fn get<T: Any + Clone>(&self, path: &str, inst: &str, key: &str) -> Result<T> {
        let target = if inst.is_empty() {
            path.to_string()
        } else {
            format!("{path}.{inst}")
        };
        let entry = self
            .entries
            .iter()
            .rev()
            .find(|e| e.key == key && glob_match(&e.glob, &target))
            .ok_or_else(|| Error::ConfigLookup {
                path: target.clone(),
                key: key.to_string(),
            })?;
        entry
            .value
            .downcast_ref::<T>()
            .cloned()
            .ok_or_else(|| Error::ConfigType {
                path: target,
                key: key.to_string(),
            })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
