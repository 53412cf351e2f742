use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A degradation applied to an image. Text form (also used for JSON):
/// `identity`, `rot:90|180|270`, `flip:h|v`, `jpeg:Q`, `noise:SIGMA`,
/// `blur:K:SIGMA`, `crop:RATIO`, `ae:FACTOR[:SIGMA]`, `then(a,b,...)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum ChannelSpec {
    Identity,
    Rotate { deg: u32 },
    FlipH,
    FlipV,
    Jpeg { quality: u8 },
    GaussianNoise { sigma: f64 },
    GaussianBlur { kernel: usize, sigma: f64 },
    CropScale { ratio: f64 },
    AutoencoderSurrogate { factor: usize, noise_sigma: f64 },
    Compose(Vec<ChannelSpec>),
}

pub const DEFAULT_AE_FACTOR: usize = 8;
pub const DEFAULT_AE_NOISE: f64 = 0.01;

impl ChannelSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = |field: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::spec(field, format!("must be a positive finite number, got {v}")))
            }
        };
        match self {
            ChannelSpec::Identity | ChannelSpec::FlipH | ChannelSpec::FlipV => Ok(()),
            ChannelSpec::Rotate { deg } => match deg {
                90 | 180 | 270 => Ok(()),
                _ => Err(Error::spec("deg", format!("rotation must be 90, 180 or 270, got {deg}"))),
            },
            ChannelSpec::Jpeg { quality } => {
                if (1..=100).contains(quality) {
                    Ok(())
                } else {
                    Err(Error::spec("quality", format!("must be in 1..=100, got {quality}")))
                }
            }
            ChannelSpec::GaussianNoise { sigma } => positive("sigma", *sigma),
            ChannelSpec::GaussianBlur { kernel, sigma } => {
                if kernel % 2 == 0 {
                    return Err(Error::spec("kernel", format!("must be odd, got {kernel}")));
                }
                positive("sigma", *sigma)
            }
            ChannelSpec::CropScale { ratio } => {
                if ratio.is_finite() && *ratio > 0.0 && *ratio <= 1.0 {
                    Ok(())
                } else {
                    Err(Error::spec("ratio", format!("must be in (0, 1], got {ratio}")))
                }
            }
            ChannelSpec::AutoencoderSurrogate { factor, noise_sigma } => {
                if *factor < 2 {
                    return Err(Error::spec("factor", format!("must be at least 2, got {factor}")));
                }
                if !(noise_sigma.is_finite() && *noise_sigma >= 0.0) {
                    return Err(Error::spec("noise_sigma", format!("must be >= 0, got {noise_sigma}")));
                }
                Ok(())
            }
            ChannelSpec::Compose(stages) => {
                if stages.is_empty() {
                    return Err(Error::spec("then", "composition needs at least one stage"));
                }
                stages.iter().try_for_each(ChannelSpec::validate)
            }
        }
    }

    /// True if the output depends on the seed.
    pub fn is_stochastic(&self) -> bool {
        match self {
            ChannelSpec::GaussianNoise { .. } => true,
            ChannelSpec::AutoencoderSurrogate { noise_sigma, .. } => *noise_sigma > 0.0,
            ChannelSpec::Compose(stages) => stages.iter().any(ChannelSpec::is_stochastic),
            _ => false,
        }
    }
}

impl fmt::Display for ChannelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelSpec::Identity => write!(f, "identity"),
            ChannelSpec::Rotate { deg } => write!(f, "rot:{deg}"),
            ChannelSpec::FlipH => write!(f, "flip:h"),
            ChannelSpec::FlipV => write!(f, "flip:v"),
            ChannelSpec::Jpeg { quality } => write!(f, "jpeg:{quality}"),
            ChannelSpec::GaussianNoise { sigma } => write!(f, "noise:{sigma}"),
            ChannelSpec::GaussianBlur { kernel, sigma } => write!(f, "blur:{kernel}:{sigma}"),
            ChannelSpec::CropScale { ratio } => write!(f, "crop:{ratio}"),
            ChannelSpec::AutoencoderSurrogate { factor, noise_sigma } => write!(f, "ae:{factor}:{noise_sigma}"),
            ChannelSpec::Compose(stages) => {
                write!(f, "then(")?;
                for (i, s) in stages.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{s}")?;
                }
                write!(f, ")")
            }
        }
    }
}

fn bad(token: &str, detail: impl fmt::Display) -> Error {
    Error::spec("channel", format!("`{token}`: {detail}"))
}

fn num<T: FromStr>(token: &str, field: &str, text: Option<&str>) -> Result<T> {
    let text = text.ok_or_else(|| bad(token, format!("missing {field}")))?;
    text.parse().map_err(|_| bad(token, format!("cannot parse {field} from `{text}`")))
}

fn split_top_level(body: &str) -> Result<Vec<&str>> {
    let mut parts = Vec::new();
    let (mut depth, mut start) = (0i32, 0);
    for (i, ch) in body.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth < 0 {
                    return Err(bad(body, "unbalanced `)`"));
                }
            }
            ',' if depth == 0 => {
                parts.push(&body[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err(bad(body, "unbalanced `(`"));
    }
    parts.push(&body[start..]);
    Ok(parts)
}

fn parse(text: &str) -> Result<ChannelSpec> {
    let token = text.trim();
    if let Some(rest) = token.strip_prefix("then(") {
        let body = rest.strip_suffix(')').ok_or_else(|| bad(token, "missing closing `)`"))?;
        let stages = split_top_level(body)?
            .into_iter()
            .map(|p| if p.trim().is_empty() { Err(bad(token, "empty stage")) } else { parse(p) })
            .collect::<Result<Vec<_>>>()?;
        return Ok(ChannelSpec::Compose(stages));
    }
    let mut fields = token.split(':');
    let head = fields.next().unwrap_or_default();
    let a = fields.next();
    let b = fields.next();
    if fields.next().is_some() {
        return Err(bad(token, "too many fields"));
    }
    let arity = |max: usize| {
        let given = a.is_some() as usize + b.is_some() as usize;
        if given > max {
            Err(bad(token, format!("`{head}` takes at most {max} argument(s)")))
        } else {
            Ok(())
        }
    };
    let spec = match head {
        "identity" => {
            arity(0)?;
            ChannelSpec::Identity
        }
        "rot" => {
            arity(1)?;
            ChannelSpec::Rotate { deg: num(token, "degrees", a)? }
        }
        "flip" => {
            arity(1)?;
            match a {
                Some("h") => ChannelSpec::FlipH,
                Some("v") => ChannelSpec::FlipV,
                other => return Err(bad(token, format!("flip axis must be h or v, got {other:?}"))),
            }
        }
        "jpeg" => {
            arity(1)?;
            ChannelSpec::Jpeg { quality: num(token, "quality", a)? }
        }
        "noise" => {
            arity(1)?;
            ChannelSpec::GaussianNoise { sigma: num(token, "sigma", a)? }
        }
        "blur" => ChannelSpec::GaussianBlur { kernel: num(token, "kernel", a)?, sigma: num(token, "sigma", b)? },
        "crop" => {
            arity(1)?;
            ChannelSpec::CropScale { ratio: num(token, "ratio", a)? }
        }
        "ae" => ChannelSpec::AutoencoderSurrogate {
            factor: if a.is_some() { num(token, "factor", a)? } else { DEFAULT_AE_FACTOR },
            noise_sigma: if b.is_some() { num(token, "sigma", b)? } else { DEFAULT_AE_NOISE },
        },
        _ => return Err(bad(token, "unknown channel")),
    };
    Ok(spec)
}

impl FromStr for ChannelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let spec = parse(s)?;
        spec.validate()?;
        Ok(spec)
    }
}

impl From<ChannelSpec> for String {
    fn from(s: ChannelSpec) -> String {
        s.to_string()
    }
}

impl TryFrom<String> for ChannelSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grammar_examples() {
        assert_eq!("identity".parse::<ChannelSpec>().unwrap(), ChannelSpec::Identity);
        assert_eq!("rot:270".parse::<ChannelSpec>().unwrap(), ChannelSpec::Rotate { deg: 270 });
        assert_eq!("blur:7:0.5".parse::<ChannelSpec>().unwrap(), ChannelSpec::GaussianBlur { kernel: 7, sigma: 0.5 });
        assert_eq!(
            "ae:8".parse::<ChannelSpec>().unwrap(),
            ChannelSpec::AutoencoderSurrogate { factor: 8, noise_sigma: DEFAULT_AE_NOISE }
        );
        let nested: ChannelSpec = "then(flip:h, then(jpeg:70,noise:0.05))".parse().unwrap();
        assert_eq!(nested.to_string(), "then(flip:h,then(jpeg:70,noise:0.05))");
        assert_eq!(nested.to_string().parse::<ChannelSpec>().unwrap(), nested);
    }

    #[test]
    fn errors_name_the_token_or_field() {
        let msg = "then(flip:h,wobble:3)".parse::<ChannelSpec>().unwrap_err().to_string();
        assert!(msg.contains("wobble:3"), "{msg}");
        let msg = "rot:45".parse::<ChannelSpec>().unwrap_err().to_string();
        assert!(msg.contains("deg"), "{msg}");
        let msg = "blur:4:1".parse::<ChannelSpec>().unwrap_err().to_string();
        assert!(msg.contains("kernel"), "{msg}");
        assert!("jpeg:0".parse::<ChannelSpec>().is_err());
        assert!("crop:1.5".parse::<ChannelSpec>().is_err());
        assert!("noise:-1".parse::<ChannelSpec>().is_err());
        assert!("ae:1".parse::<ChannelSpec>().is_err());
        assert!("then()".parse::<ChannelSpec>().is_err());
        assert!("then(flip:h".parse::<ChannelSpec>().is_err());
        assert!("jpeg:70:2".parse::<ChannelSpec>().is_err());
    }

    #[test]
    fn json_uses_text_form() {
        let s: ChannelSpec = "then(rot:90,crop:0.8)".parse().unwrap();
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(j, r#""then(rot:90,crop:0.8)""#);
        assert_eq!(serde_json::from_str::<ChannelSpec>(&j).unwrap(), s);
        assert!(serde_json::from_str::<ChannelSpec>(r#""rot:1""#).is_err());
    }
}
