use collapse_core::bounds::verdict;
use collapse_core::{CslParams, DpParams, ExperimentRecord, ModelParams};

use super::{say, CliError, CmdResult, Context};
use crate::args::{BoundKind, VerdictArgs};
use crate::{EXIT_EXCLUDED, EXIT_OK};

pub fn run(a: &VerdictArgs, experiments: &[ExperimentRecord], ctx: &mut Context) -> CmdResult {
    if experiments.is_empty() {
        return Err(CliError::Usage("no experiments to compare with".into()));
    }
    let point = match a.model {
        BoundKind::Ddp => ModelParams::Dp(DpParams::new(a.sigma, a.tbeta)?),
        BoundKind::Dcsl => {
            let lambda = a.lambda.ok_or_else(|| CliError::Usage("dcsl needs --lambda".into()))?;
            ModelParams::Csl(CslParams::new(lambda, a.sigma, a.tbeta)?)
        }
    };
    ctx.record("point", point);
    let v = verdict(&point, experiments, &ctx.consts)?;
    let body = serde_json::to_string_pretty(&v).map_err(|e| CliError::Io(e.to_string()))?;
    say(&body);
    ctx.out.text("verdict.json", &(body + "\n"))?;
    Ok(if v.excluded { EXIT_EXCLUDED } else { EXIT_OK })
}
