//! Baseline embeddings: uni-modal, concatenation and closed-form CCA fusions.
//!
//! Audio and video enter every baseline mean-pooled over frames. Solvers are
//! fit on the train split only; val and test are projected.

use crate::cca::{gcca, kernel_cca, linear_cca, KernelSpec, DEFAULT_RIDGE};
use crate::data::{Dataset, Splits};
use crate::dcca::{train_dcca, DccaConfig};
use crate::error::{Error, Result};
use crate::tensor::Tensor;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FusionKind {
    Text,
    Audio,
    Video,
    ConcatAvt,
    ConcatTa,
    ConcatTv,
    ConcatAv,
    CcaAvText,
    KccaAvText,
    Gcca,
    GccaText,
    DccaConcat,
}

const NAMES: [(FusionKind, &str); 12] = [
    (FusionKind::Text, "text"),
    (FusionKind::Audio, "audio"),
    (FusionKind::Video, "video"),
    (FusionKind::ConcatAvt, "concat-avt"),
    (FusionKind::ConcatTa, "concat-ta"),
    (FusionKind::ConcatTv, "concat-tv"),
    (FusionKind::ConcatAv, "concat-av"),
    (FusionKind::CcaAvText, "cca"),
    (FusionKind::KccaAvText, "kcca"),
    (FusionKind::Gcca, "gcca"),
    (FusionKind::GccaText, "gcca+text"),
    (FusionKind::DccaConcat, "dcca-concat"),
];

impl FusionKind {
    pub fn all() -> impl Iterator<Item = FusionKind> {
        NAMES.iter().map(|(k, _)| *k)
    }

    pub fn as_str(&self) -> &'static str {
        NAMES.iter().find(|(k, _)| k == self).map(|(_, n)| *n).unwrap()
    }

    pub fn valid_names() -> String {
        NAMES.iter().map(|(_, n)| *n).collect::<Vec<_>>().join(", ")
    }

    pub fn parse(s: &str) -> Result<FusionKind> {
        let canonical = match s.to_ascii_lowercase().as_str() {
            "cca-av+text" => "cca".to_string(),
            "kcca-av+text" => "kcca".to_string(),
            other => other.to_string(),
        };
        NAMES
            .iter()
            .find(|(_, n)| *n == canonical)
            .map(|(k, _)| *k)
            .ok_or_else(|| {
                Error::config(format!(
                    "unknown baseline kind `{s}`; valid kinds: {}",
                    Self::valid_names()
                ))
            })
    }
}

impl fmt::Display for FusionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionConfig {
    /// Components kept by the CCA-family solvers.
    pub r: usize,
    pub reg: f64,
    pub kernel: KernelSpec,
    pub dcca: DccaConfig,
}

impl FusionConfig {
    pub fn new(r: usize) -> Self {
        FusionConfig {
            r,
            reg: DEFAULT_RIDGE,
            kernel: KernelSpec::rbf_median(),
            dcca: DccaConfig::new(r),
        }
    }
}

/// Pooled (text, audio, video) row matrices for one split.
struct Views {
    t: Tensor,
    a: Tensor,
    v: Tensor,
}

impl Views {
    fn of(ds: &Dataset) -> Views {
        Views {
            t: ds.text_matrix(),
            a: ds.pooled_audio_matrix(),
            v: ds.pooled_video_matrix(),
        }
    }
}

fn hcat(parts: &[&Tensor]) -> Tensor {
    Tensor::hstack(parts)
}

/// Embedding width for `kind` given the data dims.
pub fn embedding_width(kind: FusionKind, d_t: usize, d_a: usize, d_v: usize, r: usize) -> usize {
    match kind {
        FusionKind::Text => d_t,
        FusionKind::Audio => d_a,
        FusionKind::Video => d_v,
        FusionKind::ConcatAvt => d_t + d_a + d_v,
        FusionKind::ConcatTa => d_t + d_a,
        FusionKind::ConcatTv => d_t + d_v,
        FusionKind::ConcatAv => d_a + d_v,
        FusionKind::CcaAvText | FusionKind::KccaAvText => d_t + 2 * r,
        FusionKind::Gcca => r,
        FusionKind::GccaText => r + d_t,
        FusionKind::DccaConcat => 2 * r + d_t + d_a + d_v,
    }
}

/// Embeddings (rows = records) for train, val and test.
pub fn fuse_baseline(kind: FusionKind, splits: &Splits, cfg: &FusionConfig) -> Result<[Tensor; 3]> {
    let views = [Views::of(&splits.train), Views::of(&splits.val), Views::of(&splits.test)];
    let per_split = |f: &dyn Fn(&Views) -> Result<Tensor>| -> Result<[Tensor; 3]> {
        Ok([f(&views[0])?, f(&views[1])?, f(&views[2])?])
    };
    let tr = &views[0];
    match kind {
        FusionKind::Text => per_split(&|v| Ok(v.t.clone())),
        FusionKind::Audio => per_split(&|v| Ok(v.a.clone())),
        FusionKind::Video => per_split(&|v| Ok(v.v.clone())),
        FusionKind::ConcatAvt => per_split(&|v| Ok(hcat(&[&v.a, &v.v, &v.t]))),
        FusionKind::ConcatTa => per_split(&|v| Ok(hcat(&[&v.t, &v.a]))),
        FusionKind::ConcatTv => per_split(&|v| Ok(hcat(&[&v.t, &v.v]))),
        FusionKind::ConcatAv => per_split(&|v| Ok(hcat(&[&v.a, &v.v]))),
        FusionKind::CcaAvText => {
            let sol = linear_cca(&tr.a.transpose(), &tr.v.transpose(), cfg.r, cfg.reg)?;
            per_split(&|v| {
                let (pa, pv) = crate::cca::cca_project(&sol, &v.a.transpose(), &v.v.transpose())?;
                Ok(hcat(&[&v.t, &pa.transpose(), &pv.transpose()]))
            })
        }
        FusionKind::KccaAvText => {
            let sol = kernel_cca(&tr.a.transpose(), &tr.v.transpose(), cfg.kernel, cfg.kernel, cfg.r, cfg.reg)?;
            per_split(&|v| {
                let (pa, pv) = sol.project(&v.a.transpose(), &v.v.transpose())?;
                Ok(hcat(&[&v.t, &pa.transpose(), &pv.transpose()]))
            })
        }
        FusionKind::Gcca | FusionKind::GccaText => {
            let sol = gcca(&[tr.t.transpose(), tr.a.transpose(), tr.v.transpose()], cfg.r, cfg.reg)?;
            per_split(&|v| {
                let p = sol.project(&[v.t.transpose(), v.a.transpose(), v.v.transpose()])?.transpose();
                Ok(if kind == FusionKind::GccaText {
                    hcat(&[&p, &v.t])
                } else {
                    p
                })
            })
        }
        FusionKind::DccaConcat => {
            let av = hcat(&[&tr.a, &tr.v]);
            let model = train_dcca(&tr.t, &av, &cfg.dcca)?;
            per_split(&|v| {
                let (ft, fav) = model.transform(&v.t, &hcat(&[&v.a, &v.v]))?;
                Ok(hcat(&[&ft, &fav, &v.t, &v.a, &v.v]))
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate, split, SplitRule, SyntheticSpec};

    fn splits() -> Splits {
        let ds = generate(&SyntheticSpec {
            counts: [60, 20, 20],
            ..SyntheticSpec::preset("toy", 1).unwrap()
        })
        .unwrap();
        split(&ds, &SplitRule::Prefix, 0).unwrap()
    }

    #[test]
    fn names_parse_and_aliases() {
        for k in FusionKind::all() {
            assert_eq!(FusionKind::parse(k.as_str()).unwrap(), k);
        }
        assert_eq!(FusionKind::parse("cca-av+text").unwrap(), FusionKind::CcaAvText);
        assert_eq!(FusionKind::parse("concat-AVT").unwrap(), FusionKind::ConcatAvt);
        match FusionKind::parse("fancy") {
            Err(Error::Config(m)) => assert!(m.contains("dcca-concat")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn reference_widths() {
        assert_eq!(embedding_width(FusionKind::ConcatAvt, 768, 74, 35, 30), 877);
        assert_eq!(embedding_width(FusionKind::CcaAvText, 768, 74, 35, 30), 828);
    }

    #[test]
    fn every_kind_matches_declared_width() {
        let s = splits();
        let mut cfg = FusionConfig::new(4);
        cfg.dcca.epochs = 2;
        cfg.dcca.batch_size = 30;
        for k in FusionKind::all() {
            let out = fuse_baseline(k, &s, &cfg).unwrap();
            let w = embedding_width(k, 16, 8, 6, 4);
            assert_eq!(out[0].shape(), &[60, w], "{k}");
            assert_eq!(out[2].shape(), &[20, w], "{k}");
            assert!(out.iter().all(Tensor::is_finite), "{k}");
        }
    }
}
