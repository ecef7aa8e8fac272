use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{ChamferIndex, RigidTransform};
use crate::plausibility::{PlausibilityVerdict, SceneState, SurfaceParams, DEFAULT_EPSILON};
use crate::scoring::{best_index, render, score_pose, CameraIntrinsics, DepthImage, Mask, NormalImage, ScoreConfig};
use crate::{Error, Result};

use super::{
    alignment_reward, apply_action, build_observation, compute_distances, plausibility_reward, Action, ActionSpace, foreground_chamfer,
    Observation, Policy, PolicyContext, RewardConfig, RewardSet,
};

/// Episode settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub iterations: usize,
    pub steps: ActionSpace,
    pub epsilon: f64,
    pub rewards: RewardConfig,
    pub surface: SurfaceParams,
    /// Length of the class one-hot vector.
    pub num_classes: usize,
    /// Keep full observations in the trajectory (needed for imitation export).
    pub record_observations: bool,
    pub seed: u64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            iterations: 10,
            steps: ActionSpace::default(),
            epsilon: DEFAULT_EPSILON,
            rewards: RewardConfig::default(),
            surface: SurfaceParams::default(),
            num_classes: 4,
            record_observations: false,
            seed: 0,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidArgument(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.surface.k == 0 || !(self.surface.quorum > 0.0 && self.surface.quorum <= 1.0) {
            return Err(Error::InvalidArgument("quorum needs k >= 1 and a fraction in (0, 1]".into()));
        }
        Ok(())
    }
}

/// Observed images used to score every visited pose.
#[derive(Clone, Debug)]
pub struct RenderContext {
    pub cam: CameraIntrinsics,
    pub depth: DepthImage,
    pub normals: NormalImage,
    /// Estimated segmentation mask per object.
    pub masks: Vec<Mask>,
    pub score: ScoreConfig,
}

impl RenderContext {
    pub fn score(&self, scene: &SceneState, index: usize, pose: &RigidTransform) -> Result<f64> {
        let (d, n) = render(&scene.objects[index].model.mesh, pose, &self.cam)?;
        score_pose((&d, &n), (&self.depth, &self.normals), self.masks.get(index), &self.score)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// 1-based step number.
    pub iteration: usize,
    /// Observation the action was chosen from, when recorded.
    pub observation: Option<Observation>,
    pub action: Action,
    /// Estimate after the action.
    pub pose: RigidTransform,
    /// Chamfer distance after the action.
    pub cd: f64,
    pub rewards: RewardSet,
    /// Verdict under the estimate after the action.
    pub verdict: PlausibilityVerdict,
    pub score: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub object_index: usize,
    pub object_id: u32,
    pub class_id: u32,
    pub init_pose: RigidTransform,
    pub gt_pose: Option<RigidTransform>,
    pub init_cd: f64,
    pub init_verdict: PlausibilityVerdict,
    pub init_score: Option<f64>,
    pub steps: Vec<StepRecord>,
}

impl Trajectory {
    /// Initial pose followed by the pose after every step.
    pub fn poses(&self) -> Vec<RigidTransform> {
        std::iter::once(self.init_pose).chain(self.steps.iter().map(|s| s.pose)).collect()
    }

    pub fn final_pose(&self) -> RigidTransform {
        self.steps.last().map_or(self.init_pose, |s| s.pose)
    }

    /// Render scores aligned with [`Trajectory::poses`], when all were scored.
    pub fn scores(&self) -> Option<Vec<f64>> {
        std::iter::once(self.init_score).chain(self.steps.iter().map(|s| s.score)).collect()
    }

    /// Best-scoring pose (ties to the latest); the final pose when unscored.
    pub fn best_pose(&self) -> (usize, RigidTransform) {
        match self.scores().and_then(|s| best_index(&s)) {
            Some(i) => (i, self.poses()[i]),
            None => (self.steps.len(), self.final_pose()),
        }
    }
}

/// Runs `cfg.iterations` scene-synchronous steps. Each iteration computes the surface
/// distances once for the current estimates, lets the policy pick one action per object
/// and then applies all actions together. The plausibility reward of a step is read from
/// the distances computed after it. The scene is left at the final estimates.
pub fn refine_scene(
    scene: &mut SceneState,
    policy: &dyn Policy,
    cfg: &EnvConfig,
    gt: Option<&[RigidTransform]>,
    render: Option<&RenderContext>,
) -> Result<Vec<Trajectory>> {
    cfg.validate()?;
    if scene.objects.is_empty() {
        return Err(Error::EmptyScene);
    }
    scene.plane()?;
    let alignment: Vec<ChamferIndex> = scene.objects.iter().map(foreground_chamfer).collect::<Result<_>>()?;
    let n = scene.objects.len();
    let score_all = |scene: &SceneState| -> Result<Vec<Option<f64>>> {
        match render {
            Some(ctx) => (0..n).into_par_iter().map(|i| ctx.score(scene, i, &scene.objects[i].estimate).map(Some)).collect(),
            None => Ok(vec![None; n]),
        }
    };

    let mut cache = compute_distances(scene, cfg.epsilon, cfg.surface)?;
    let init_scores = score_all(scene)?;
    let mut trajectories: Vec<Trajectory> = (0..n)
        .map(|i| {
            let obj = &scene.objects[i];
            Trajectory {
                object_index: i,
                object_id: obj.id,
                class_id: obj.model.class_id,
                init_pose: obj.estimate,
                gt_pose: gt.and_then(|g| g.get(i).copied()),
                init_cd: alignment[i].distance(&obj.estimate),
                init_verdict: cache.objects[i].verdict,
                init_score: init_scores[i],
                steps: Vec::with_capacity(cfg.iterations),
            }
        })
        .collect();

    for iteration in 1..=cfg.iterations {
        let ctx = PolicyContext { scene, distances: &cache, space: &cfg.steps, num_classes: cfg.num_classes };
        let chosen: Vec<(Action, Option<Observation>)> = (0..n)
            .into_par_iter()
            .map(|i| {
                let obs = if cfg.record_observations { Some(build_observation(scene, i, &cache, cfg.num_classes)?) } else { None };
                let action = policy.act(&ctx, i)?;
                action.validate(&cfg.steps)?;
                Ok((action, obs))
            })
            .collect::<Result<_>>()?;

        for (i, (action, observation)) in chosen.into_iter().enumerate() {
            let obj = &mut scene.objects[i];
            let prev_cd = trajectories[i].steps.last().map_or(trajectories[i].init_cd, |s| s.cd);
            let pose = apply_action(&obj.estimate, &action, &cfg.steps, &obj.model);
            let cd = alignment[i].distance(&pose);
            obj.estimate = pose;
            trajectories[i].steps.push(StepRecord {
                iteration,
                observation,
                action,
                pose,
                cd,
                rewards: RewardSet { alignment: alignment_reward(prev_cd, cd, &cfg.rewards), plausibility: 0.0 },
                verdict: PlausibilityVerdict::default(),
                score: None,
            });
        }

        cache = compute_distances(scene, cfg.epsilon, cfg.surface)?;
        let scores = score_all(scene)?;
        for (i, traj) in trajectories.iter_mut().enumerate() {
            let step = traj.steps.last_mut().expect("pushed above");
            step.verdict = cache.objects[i].verdict;
            step.rewards.plausibility = plausibility_reward(&step.verdict, cfg.rewards.plausibility);
            step.score = scores[i];
        }
    }
    Ok(trajectories)
}

fn flag(b: bool) -> u8 {
    b as u8
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |s| s.to_string())
}

/// One row per object and iteration; iteration 0 is the initial estimate.
pub fn write_trajectories_csv<W: Write>(trajectories: &[Trajectory], mut out: W) -> Result<()> {
    writeln!(out, "iteration,object,rx,ry,rz,tx,ty,tz,cd,alignment_reward,plausibility_reward,intersecting,floating,feasible,stable,score")?;
    for t in trajectories {
        let v = t.init_verdict;
        writeln!(
            out,
            "0,{},0,0,0,0,0,0,{},,,{},{},{},{},{}",
            t.object_id,
            t.init_cd,
            flag(v.intersecting),
            flag(v.floating),
            flag(v.feasible),
            flag(v.stable),
            opt(t.init_score)
        )?;
        for s in &t.steps {
            let a = s.action.indices();
            let v = s.verdict;
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                s.iteration,
                t.object_id,
                a[0],
                a[1],
                a[2],
                a[3],
                a[4],
                a[5],
                s.cd,
                s.rewards.alignment,
                s.rewards.plausibility,
                flag(v.intersecting),
                flag(v.floating),
                flag(v.feasible),
                flag(v.stable),
                opt(s.score)
            )?;
        }
    }
    Ok(())
}
