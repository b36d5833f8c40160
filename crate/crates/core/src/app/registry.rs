/// One tunable scenario parameter with its default as written on the
/// command line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParamInfo {
    pub name: &'static str,
    pub default: &'static str,
    pub help: &'static str,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScenarioInfo {
    pub id: &'static str,
    pub summary: &'static str,
    pub paths: usize,
    pub steps: usize,
    pub horizon: f64,
    pub params: &'static [ParamInfo],
}

const fn p(name: &'static str, default: &'static str, help: &'static str) -> ParamInfo {
    ParamInfo {
        name,
        default,
        help,
    }
}

const COMMON: [ParamInfo; 2] = [
    p(
        "threshold",
        "0.05",
        "residual ratio a battery target must stay below",
    ),
    p(
        "tie_tol",
        "0",
        "collision rate tolerated between the thick part and the family",
    ),
];

pub static SCENARIOS: &[ScenarioInfo] = &[
    ScenarioInfo {
        id: "cox-continuous",
        summary: "Brownian reference filtration, Cox time with continuous intensity; thick part only, basis {W, H}",
        paths: 20_000,
        steps: 50,
        horizon: 2.0,
        params: &[
            p("lambda", "1", "base intensity"),
            p("slope", "0", "intensity slope on |W|: lambda_t = lambda + slope |W_t|"),
            p("survival_points", "5", "number of grid times at which survival is checked"),
            COMMON[0],
            COMMON[1],
        ],
    },
    ScenarioInfo {
        id: "cox-jumps",
        summary: "Cox time whose cumulative hazard jumps at deterministic dates; nontrivial thin part at those dates",
        paths: 20_000,
        steps: 50,
        horizon: 2.0,
        params: &[
            p("lambda", "0.5", "continuous intensity between the dates"),
            p("jump_times", "0.5,1.2", "dates of the hazard jumps, snapped to the grid"),
            p("jump_size", "0.4", "size of each hazard jump"),
            p("thin_source", "analytic", "analytic | regression: how the thin probabilities are obtained"),
            p("thick_source", "analytic", "analytic | empirical: how the thick hazard is obtained"),
            COMMON[0],
            COMMON[1],
        ],
    },
    ScenarioInfo {
        id: "hybrid-default",
        summary: "minimum of a time thin over review dates and an independent Cox time",
        paths: 20_000,
        steps: 50,
        horizon: 2.0,
        params: &[
            p("review_times", "0.4,0.8,1.2,1.6", "review dates, snapped to the grid"),
            p("review_size", "0.3", "base hazard charged at a review date"),
            p("review_slope", "0.5", "review hazard multiplier on |W|: size (1 + slope |W|)"),
            p("lambda", "0.4", "intensity of the independent Cox time"),
            p("thin_source", "analytic", "analytic | regression"),
            p("thick_source", "analytic", "analytic | empirical"),
            COMMON[0],
            COMMON[1],
        ],
    },
    ScenarioInfo {
        id: "levy-transform",
        summary: "Levy transform of W with its exponential S, tau the first time W reaches 1, thin over the alternating hitting times of |W|",
        paths: 100_000,
        steps: 4000,
        horizon: 5.0,
        params: &[
            p("coefficient", "0.5", "thin probability used to build N"),
            p("broken_coefficient", "0.6", "deliberately wrong coefficient expected to fail the drift test"),
            p("members", "8", "number of alternating hitting times kept"),
            p("inner_beta", "0.5826", "inner level of the alternating sequence in units of sqrt(dt)"),
            p("record_every", "40", "fine steps between recorded points used by drift tests and projections"),
            p("chunk", "1000", "paths simulated per streaming chunk"),
            p("battery", "on", "on | off: informational projections of S_T and default payoffs on {S, N}"),
            p("shrink", "0.4", "required relative shrink of E|[S,N]_T| when dt is halved"),
            p("threshold", "0.05", "residual ratio of N on {S, N} must stay below"),
            p("fail_floor", "0.9", "residual ratio of N on {S} must reach"),
        ],
    },
    ScenarioInfo {
        id: "levy-jumps",
        summary: "Brownian motion plus compound Poisson jumps with finitely many marks; basis W, compensated counters and H",
        paths: 20_000,
        steps: 50,
        horizon: 2.0,
        params: &[
            p("marks", "-0.5,1", "jump sizes"),
            p("rates", "0.8,0.5", "arrival rate per mark"),
            p("intensity_base", "0.5", "Cox intensity a in a + b |X|"),
            p("intensity_slope", "0.2", "Cox intensity b in a + b |X|"),
            p("jump_times", "1", "dates of predictable hazard jumps (may be empty)"),
            p("jump_size", "0.3", "size of each hazard jump"),
            COMMON[0],
            COMMON[1],
        ],
    },
];

pub fn find(id: &str) -> Option<&'static ScenarioInfo> {
    SCENARIOS.iter().find(|s| s.id == id)
}

/// Multi-line description used by the `describe` verb.
pub fn describe(info: &ScenarioInfo) -> String {
    let mut s = format!(
        "{}\n  {}\n  defaults: paths={} steps={} horizon={}\n  parameters:\n",
        info.id, info.summary, info.paths, info.steps, info.horizon
    );
    for p in info.params {
        s.push_str(&format!("    {} = {}  ({})\n", p.name, p.default, p.help));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_are_unique_and_params_distinct() {
        for (i, s) in SCENARIOS.iter().enumerate() {
            assert!(SCENARIOS[..i].iter().all(|o| o.id != s.id));
            for (j, p) in s.params.iter().enumerate() {
                assert!(
                    s.params[..j].iter().all(|o| o.name != p.name),
                    "{} repeats {}",
                    s.id,
                    p.name
                );
            }
        }
        assert!(find("levy-transform").is_some());
        assert!(describe(find("cox-jumps").unwrap()).contains("jump_size"));
    }
}
