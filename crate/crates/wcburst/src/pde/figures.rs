//! Frozen experiment configurations for the published simulations, with
//! parameters given as offsets from the pitchfork of the rest equation.

use serde::{Deserialize, Serialize};

use super::{Grid1D, Perturbation, SimConfig};
use super::pattern::PatternKind;
use crate::scales::ScaleParams;
use crate::unfolding::{find_pitchfork, Pitchfork, UnfoldingError, UnfoldingParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FigureId {
    Fig6,
    Fig7,
    Fig8,
    Fig9,
    Fig10,
    Fig11,
}

impl FigureId {
    pub const ALL: [FigureId; 6] = [Self::Fig6, Self::Fig7, Self::Fig8, Self::Fig9, Self::Fig10, Self::Fig11];

    pub fn name(self) -> &'static str {
        match self {
            Self::Fig6 => "fig6",
            Self::Fig7 => "fig7",
            Self::Fig8 => "fig8",
            Self::Fig9 => "fig9",
            Self::Fig10 => "fig10",
            Self::Fig11 => "fig11",
        }
    }
}

impl std::str::FromStr for FigureId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL.into_iter().find(|f| f.name() == s).ok_or_else(|| format!("unknown figure {s:?}"))
    }
}

/// What a panel's classification must show.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule", content = "kind")]
pub enum Expect {
    Kind(PatternKind),
    NotTraveling,
    NotStanding,
    Any,
}

impl Expect {
    pub fn holds(self, kind: PatternKind) -> bool {
        match self {
            Self::Kind(k) => k == kind,
            Self::NotTraveling => !kind.is_traveling(),
            Self::NotStanding => !kind.is_standing(),
            Self::Any => true,
        }
    }
}

/// `λ = λ_PF(β) + d_lambda`, `α = α_PF(β) + d_alpha`, `γ = γ_PF(β)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Recipe {
    pub beta: f64,
    pub d_lambda: f64,
    pub d_alpha: f64,
}

impl Recipe {
    pub fn params(&self) -> Result<(UnfoldingParams, Pitchfork), UnfoldingError> {
        let pf = find_pitchfork(self.beta)?;
        let p = UnfoldingParams::new(pf.lambda + self.d_lambda, pf.alpha + self.d_alpha, self.beta, pf.gamma);
        Ok((p, pf))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Panel {
    pub label: String,
    pub recipe: Recipe,
    /// Pitchfork at `recipe.beta`, frozen when the file was written.
    pub pitchfork: Pitchfork,
    pub expect: Expect,
    /// Reduced cell count for quick runs.
    pub ci_n: usize,
    pub config: SimConfig,
}

impl Panel {
    /// The panel at `n` cells (scaled perturbation and output settings are
    /// unaffected).
    pub fn at_resolution(&self, n: usize) -> SimConfig {
        let mut c = self.config.clone();
        c.grid.n = n;
        c
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FigureSpec {
    pub figure: FigureId,
    pub panels: Vec<Panel>,
}

struct Base {
    grid: Grid1D,
    scales: ScaleParams,
    recipe: Recipe,
    t_end: f64,
    dt_out: f64,
    perturbation: Perturbation,
    ci_n: usize,
}

fn traveling_base() -> Base {
    Base {
        grid: Grid1D { x0: 0.0, x1: 5.0, n: 3000 },
        scales: ScaleParams { tau_u: 0.001, tau_w: 0.1, tau_z: 60.0, d_u: 5e-5, d_w: 0.0, d_z: 0.0 },
        recipe: Recipe { beta: 1.0 / 3.0, d_lambda: -0.02, d_alpha: 0.47 },
        t_end: 5.0,
        dt_out: 0.005,
        perturbation: Perturbation { x_lo: 0.0, x_hi: 0.05, t_lo: 0.0, t_hi: 0.25, amplitude: 1.0 },
        ci_n: 1000,
    }
}

fn standing_base() -> Base {
    Base {
        grid: Grid1D { x0: -20.0, x1: 20.0, n: 6000 },
        scales: ScaleParams { tau_u: 0.01, tau_w: 0.01, tau_z: 0.01, d_u: 1e-4, d_w: 0.025, d_z: 100.0 },
        recipe: Recipe { beta: 1.0 / 3.0 + 0.1, d_lambda: -0.275, d_alpha: 1.125 },
        t_end: 50.0,
        dt_out: 0.05,
        perturbation: Perturbation { x_lo: -0.1, x_hi: 0.1, t_lo: 0.0, t_hi: 0.5, amplitude: 1.0 },
        ci_n: 2000,
    }
}

fn panel(label: &str, b: &Base, expect: Expect) -> Result<Panel, UnfoldingError> {
    let (params, pitchfork) = b.recipe.params()?;
    let config = SimConfig {
        grid: b.grid,
        scales: b.scales,
        params,
        t_end: b.t_end,
        dt_out: b.dt_out,
        dt_max: b.scales.tau_u / 10.0,
        perturbation: b.perturbation,
        initial_state: Default::default(),
        tol: 1e-3,
        reaction: true,
    };
    Ok(Panel { label: label.into(), recipe: b.recipe, pitchfork, expect, ci_n: b.ci_n, config })
}

/// Panels of a figure, materialized from the pitchfork solver.
pub fn figure_spec(id: FigureId) -> Result<FigureSpec, UnfoldingError> {
    use PatternKind::*;
    let tb = traveling_base;
    let sb = standing_base;
    let with = |mut b: Base, f: &dyn Fn(&mut Base)| {
        f(&mut b);
        b
    };
    let panels = match id {
        FigureId::Fig6 => vec![
            panel("burst", &tb(), Expect::Kind(TravelingBurst))?,
            panel(
                "pulse",
                &with(tb(), &|b| {
                    b.recipe.d_lambda = 0.15;
                    b.recipe.d_alpha = 0.4;
                }),
                Expect::Kind(TravelingPulse),
            )?,
        ],
        FigureId::Fig7 => vec![
            panel("burst", &sb(), Expect::Kind(StandingBurst))?,
            panel(
                "pulse",
                &with(sb(), &|b| b.recipe = Recipe { beta: 1.0 / 3.0, d_lambda: 0.1, d_alpha: 0.385 }),
                Expect::Kind(StandingPulse),
            )?,
        ],
        FigureId::Fig8 => vec![panel("burst", &tb(), Expect::Kind(TravelingBurst))?],
        FigureId::Fig9 => vec![
            panel(
                "weak_diffusion",
                &with(tb(), &|b| {
                    b.scales.d_w = 0.01;
                    b.scales.d_z = 1.0;
                }),
                Expect::Kind(TravelingBurst),
            )?,
            panel(
                "strong_diffusion",
                &with(tb(), &|b| {
                    b.scales.d_w = 0.1;
                    b.scales.d_z = 100.0;
                }),
                Expect::NotTraveling,
            )?,
        ],
        FigureId::Fig10 => vec![panel("burst", &sb(), Expect::Kind(StandingBurst))?],
        FigureId::Fig11 => [(0.1, 1.0, Expect::Any), (0.5, 25.0, Expect::Any), (1.0, 100.0, Expect::NotStanding)]
            .into_iter()
            .map(|(tw, tz, e)| {
                let b = with(sb(), &|b| {
                    b.scales.tau_w = tw;
                    b.scales.tau_z = tz;
                });
                panel(&format!("tau_w_{tw}_tau_z_{tz}"), &b, e)
            })
            .collect::<Result<_, _>>()?,
    };
    Ok(FigureSpec { figure: id, panels })
}
