use std::cmp::Reverse;
use std::collections::BTreeMap;
use std::path::Path;

use globset::{GlobBuilder, GlobMatcher};

use super::{builtin_presets, parse_layout, LayoutDocument, LayoutError};

pub const LAYOUT_EXTENSION: &str = "btwlayout";

/// Site patterns are globs over the full URL: `*` matches any run of
/// characters (including `/`), `?` any single character.
pub(crate) fn compile_pattern(pattern: &str) -> Result<GlobMatcher, globset::Error> {
    Ok(GlobBuilder::new(pattern)
        .literal_separator(false)
        .backslash_escape(true)
        .build()?
        .compile_matcher())
}

/// Number of non-wildcard characters in a site pattern.
pub fn literal_len(pattern: &str) -> usize {
    pattern.chars().filter(|c| !matches!(c, '*' | '?')).count()
}

/// Best layout for `url`: the longest literal pattern wins, then the
/// lexicographically smallest name.
pub fn match_layout<'a, I>(url: &str, docs: I) -> Option<&'a LayoutDocument>
where
    I: IntoIterator<Item = &'a LayoutDocument>,
{
    docs.into_iter()
        .filter(|d| compile_pattern(&d.site_pattern).is_ok_and(|m| m.is_match(url)))
        .max_by_key(|d| (literal_len(&d.site_pattern), Reverse(d.name.as_str()), Reverse(d.site_pattern.as_str())))
}

/// Named layouts, built-ins first, overridable from disk.
#[derive(Debug, Clone, Default)]
pub struct LayoutStore {
    docs: BTreeMap<String, LayoutDocument>,
}

impl LayoutStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_builtins() -> Self {
        let mut s = Self::new();
        for d in builtin_presets() {
            s.insert(d);
        }
        s
    }

    /// Adds or replaces the layout with the same name.
    pub fn insert(&mut self, doc: LayoutDocument) -> Option<LayoutDocument> {
        self.docs.insert(doc.name.clone(), doc)
    }

    /// Loads every `*.btwlayout` file in `dir`. Returns the loaded names.
    pub fn load_dir(&mut self, dir: &Path) -> Result<Vec<String>, LoadError> {
        let mut paths: Vec<_> = std::fs::read_dir(dir)
            .map_err(|e| LoadError::Io(dir.display().to_string(), e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == LAYOUT_EXTENSION))
            .collect();
        paths.sort();
        let mut names = Vec::new();
        for p in paths {
            let text = std::fs::read_to_string(&p).map_err(|e| LoadError::Io(p.display().to_string(), e))?;
            let doc = parse_layout(&text).map_err(|e| LoadError::Layout(p.display().to_string(), e))?;
            names.push(doc.name.clone());
            self.insert(doc);
        }
        Ok(names)
    }

    pub fn get(&self, name: &str) -> Option<&LayoutDocument> {
        self.docs.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.docs.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = &LayoutDocument> {
        self.docs.values()
    }

    pub fn match_url(&self, url: &str) -> Option<&LayoutDocument> {
        match_layout(url, self.docs.values())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error("{0}: {1}")]
    Layout(String, #[source] LayoutError),
}
