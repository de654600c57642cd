//! Key=value configuration sections and generator-set loading.
//!
//! ```ini
//! [generators]
//! list = f, g            ; or: preset = pp | wreath
//!
//! [generator.f]
//! family = spline
//! knots = 0 0, 0.1 0.251, 0.9 0.349, 1 1
//! end_slopes = 1 1
//! ```
//!
//! Families: `mobius` (`lambda`), `polybump` (`c`, optional `support = lo hi`),
//! `spline` (`knots`, `end_slopes`), `blend` (`of`, `t`), `identity`.

use std::str::FromStr;

use ini::Ini;

use crate::certify::Interval;
use crate::diffeo::{presets, GeneratorMap, GeneratorSet};
use crate::zassenhaus::wreath::{build_wreath_pair, WreathPair};
use crate::{Error, Result};

pub const DEFAULT_WREATH_EPSILON: f64 = 0.1;
pub const DEFAULT_WREATH_CORE: (f64, f64) = (0.40, 0.41);
pub const DEFAULT_WREATH_K: usize = 3;

#[derive(Debug, Clone)]
pub struct Config {
    ini: Ini,
}

fn parse_value<T: FromStr>(section: &str, key: &str, raw: &str) -> Result<T> {
    raw.trim().parse().map_err(|_| Error::Config(format!("[{section}] {key} = `{raw}` is not a valid value")))
}

fn parse_list(section: &str, key: &str, raw: &str) -> Result<Vec<f64>> {
    raw.split_whitespace().map(|t| parse_value(section, key, t)).collect()
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| Error::Config(format!("malformed configuration: {e}")))?;
        Ok(Self { ini })
    }

    pub fn has_section(&self, section: &str) -> bool {
        self.ini.section(Some(section)).is_some()
    }

    pub fn get_str(&self, section: &str, key: &str) -> Option<&str> {
        self.ini.get_from(Some(section), key).map(str::trim)
    }

    pub fn get<T: FromStr>(&self, section: &str, key: &str) -> Result<Option<T>> {
        self.get_str(section, key).map(|raw| parse_value(section, key, raw)).transpose()
    }

    pub fn get_or<T: FromStr>(&self, section: &str, key: &str, default: T) -> Result<T> {
        Ok(self.get(section, key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, section: &str, key: &str) -> Result<T> {
        self.get(section, key)?.ok_or_else(|| Error::Config(format!("missing key `{key}` in section [{section}]")))
    }

    /// Two whitespace-separated reals.
    pub fn get_pair(&self, section: &str, key: &str) -> Result<Option<(f64, f64)>> {
        match self.get_str(section, key) {
            None => Ok(None),
            Some(raw) => match parse_list(section, key, raw)?.as_slice() {
                [a, b] => Ok(Some((*a, *b))),
                _ => Err(Error::Config(format!("[{section}] {key} needs two numbers, got `{raw}`"))),
            },
        }
    }

    /// The wreath pair from `[wreath]` (`epsilon`, `core`, `k`).
    pub fn wreath_pair(&self) -> Result<WreathPair> {
        let eps = self.get_or("wreath", "epsilon", DEFAULT_WREATH_EPSILON)?;
        let (lo, hi) = self.get_pair("wreath", "core")?.unwrap_or(DEFAULT_WREATH_CORE);
        let k = self.get_or("wreath", "k", DEFAULT_WREATH_K)?;
        build_wreath_pair(eps, Interval::new(lo, hi)?, k)
    }

    /// Builds the generator set named in `[generators]`.
    pub fn generator_set(&self) -> Result<GeneratorSet> {
        if let Some(preset) = self.get_str("generators", "preset") {
            return match preset {
                "pp" => Ok(presets::pp()),
                "wreath" => Ok(self.wreath_pair()?.set),
                other => Err(Error::Config(format!("unknown generator preset `{other}`"))),
            };
        }
        let list = self
            .get_str("generators", "list")
            .ok_or_else(|| Error::Config("section [generators] needs `preset` or `list`".into()))?;
        let ids: Vec<&str> = list.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
        let mut built: Vec<GeneratorMap> = Vec::with_capacity(ids.len());
        for id in &ids {
            let g = self.generator(id, &built)?;
            built.push(g);
        }
        GeneratorSet::new(built)
    }

    fn generator(&self, id: &str, built: &[GeneratorMap]) -> Result<GeneratorMap> {
        let section = format!("generator.{id}");
        if !self.has_section(&section) {
            return Err(Error::Config(format!("generator `{id}` has no section [{section}]")));
        }
        let family: String = self.require(&section, "family")?;
        match family.as_str() {
            "mobius" => GeneratorMap::mobius(id, self.require(&section, "lambda")?),
            "polybump" => {
                let c = self.require(&section, "c")?;
                match self.get_pair(&section, "support")? {
                    Some((lo, hi)) => GeneratorMap::polybump_on(id, c, lo, hi),
                    None => GeneratorMap::polybump(id, c),
                }
            }
            "spline" => {
                let raw: String = self.require(&section, "knots")?;
                let knots = raw
                    .split(',')
                    .map(|pair| match parse_list(&section, "knots", pair)?.as_slice() {
                        [x, y] => Ok((*x, *y)),
                        _ => Err(Error::Config(format!("[{section}] knot `{pair}` needs two numbers"))),
                    })
                    .collect::<Result<Vec<_>>>()?;
                let (s0, s1) = self.get_pair(&section, "end_slopes")?.unwrap_or((1.0, 1.0));
                GeneratorMap::spline(id, &knots, s0, s1)
            }
            "blend" => {
                let of: String = self.require(&section, "of")?;
                let t = self.require(&section, "t")?;
                let base = match built.iter().find(|g| g.id() == of) {
                    Some(g) => g.clone(),
                    None => self.generator(&of, built)?,
                };
                GeneratorMap::blend(id, &base, t)
            }
            "identity" => GeneratorMap::identity(id),
            other => Err(Error::Config(format!("generator `{id}` has unknown family `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn explicit_generators() {
        let cfg = Config::parse(
            "[generators]\nlist = f, m, b, h\n\
             [generator.f]\nfamily = spline\nknots = 0 0, 0.1 0.251, 0.9 0.349, 1 1\nend_slopes = 1 1\n\
             [generator.m]\nfamily = mobius\nlambda = 2\n\
             [generator.b]\nfamily = polybump\nc = 0.5\nsupport = 0.2 0.4\n\
             [generator.h]\nfamily = blend\nof = f\nt = 0.25\n",
        )
        .unwrap();
        let set = cfg.generator_set().unwrap();
        assert_eq!(set.names(), vec!["f", "m", "b", "h"]);
        assert_eq!(set.generator(0), &presets::pp_f());
        assert_eq!(set.generator(2).eval(0.1), (0.1, 1.0));
    }

    #[test]
    fn presets_and_errors() {
        let pp = Config::parse("[generators]\npreset = pp\n").unwrap();
        assert_eq!(pp.generator_set().unwrap(), presets::pp());
        let w = Config::parse("[generators]\npreset = wreath\n[wreath]\nk = 2\n").unwrap();
        assert!(w.generator_set().unwrap().wreath_roles().is_some());
        for bad in [
            "[generators]\npreset = nope\n",
            "[generators]\nlist = q\n",
            "[generators]\nlist = q\n[generator.q]\nfamily = mobius\nlambda = two\n",
            "[generators]\nlist = q\n[generator.q]\nfamily = spline\nknots = 0 0, 1\n",
            "[generators]\n",
        ] {
            assert!(matches!(Config::parse(bad).unwrap().generator_set(), Err(Error::Config(_))), "{bad}");
        }
    }

    #[test]
    fn typed_getters() {
        let cfg = Config::parse("[params]\nepsilon = 0.5\nn = 3\nrange = 0.1 0.2\n").unwrap();
        assert_eq!(cfg.get::<f64>("params", "epsilon").unwrap(), Some(0.5));
        assert_eq!(cfg.get_or::<usize>("params", "missing", 7).unwrap(), 7);
        assert_eq!(cfg.get_pair("params", "range").unwrap(), Some((0.1, 0.2)));
        assert!(cfg.require::<usize>("params", "epsilon").is_err());
    }
}
