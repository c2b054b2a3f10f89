//! Transactional migration of repositories along a recorded history.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::history::{self, Change, History, HistoryError, PrimitiveChange, PrimitiveKind, Scalar};
use crate::metamodel::{Metamodel, MetamodelError, QualifiedName};
use crate::model::{Layered, ModelError, ObjId, Repository, SlotWrite, Value, Violation};
use crate::operations;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MigrationError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Metamodel(#[from] MetamodelError),
    #[error("{0}")]
    Custom(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("input model does not conform to release {release}: {} violation(s)", .violations.len())]
    NonconformingInput { release: usize, violations: Vec<Violation> },
    #[error("no migration hook named `{0}` is registered")]
    UnknownHook(String),
    #[error("a migration hook named `{0}` is already registered")]
    DuplicateHook(String),
    #[error("cannot migrate backwards from release {from} to {to}")]
    InvalidRange { from: usize, to: usize },
    #[error(transparent)]
    History(#[from] HistoryError),
}

/// What a migration body sees: the repository being edited, the metamodels
/// before and after the adaptation, and the reflective helpers.
pub struct Context<'a> {
    repo: &'a mut Repository,
    before: &'a Metamodel,
    after: &'a Metamodel,
    params: &'a BTreeMap<String, String>,
    warnings: Vec<String>,
}

impl<'a> Context<'a> {
    pub fn before(&self) -> &'a Metamodel {
        self.before
    }

    pub fn after(&self) -> &'a Metamodel {
        self.after
    }

    pub fn repo(&self) -> &Repository {
        self.repo
    }

    pub fn repo_mut(&mut self) -> &mut Repository {
        self.repo
    }

    /// Features resolve against the metamodel after the adaptation first,
    /// then against the one before.
    pub fn schema(&self) -> Layered<'a> {
        Layered {
            primary: self.after,
            fallback: self.before,
        }
    }

    pub fn param(&self, name: &str) -> Option<&'a str> {
        self.params.get(name).map(String::as_str)
    }

    pub fn warn(&mut self, message: String) {
        self.warnings.push(message);
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn all_instances(&self, class: &str, include_subtypes: bool) -> Result<Vec<ObjId>, MigrationError> {
        Ok(self.repo.all_instances(&self.schema(), class, include_subtypes)?)
    }

    pub fn get_slot(&self, id: &ObjId, feature: &str) -> Result<Option<Value>, MigrationError> {
        Ok(self.repo.get_slot(&self.schema(), id, feature)?)
    }

    pub fn write_slot(&mut self, id: &ObjId, feature: &str, write: SlotWrite) -> Result<(), MigrationError> {
        let schema = self.schema();
        if let Some(warning) = self.repo.write_slot(&schema, id, feature, write)? {
            self.warnings.push(warning);
        }
        Ok(())
    }

    pub fn new_instance(&mut self, resource: &str, class: &str) -> Result<ObjId, MigrationError> {
        let schema = self.schema();
        Ok(self.repo.new_instance(&schema, resource, class)?)
    }

    /// Deletes an object and its containment subtree; returns every deleted id.
    pub fn delete_instance(&mut self, id: &ObjId) -> Result<Vec<ObjId>, MigrationError> {
        let schema = self.schema();
        Ok(self.repo.delete_instance(&schema, id)?)
    }

    pub fn get_inverse(&self, target: &ObjId, feature: &str) -> Result<Vec<ObjId>, MigrationError> {
        Ok(self.repo.get_inverse(&self.schema(), target, &QualifiedName::new(feature))?)
    }

    /// Nodes reachable from `start` along a directed path of at least
    /// `min_len` edges. Edges are objects of `edge_class` whose `source` and
    /// `target` slots both hold an existing object; outgoing edges are found
    /// by inverse navigation of `source`.
    pub fn get_reachable(
        &self,
        start: &ObjId,
        edge_class: &str,
        source: &str,
        target: &str,
        min_len: usize,
    ) -> Result<BTreeSet<ObjId>, MigrationError> {
        if min_len == 0 {
            return Err(MigrationError::Custom("getReachable needs a positive path length".into()));
        }
        self.repo.object(start)?;
        let source = QualifiedName::member_of(edge_class, source);
        let successors = |node: &ObjId| -> Result<BTreeSet<ObjId>, MigrationError> {
            let mut out = BTreeSet::new();
            for edge in self.repo.get_inverse(&self.schema(), node, &source)? {
                if let Some(next) = self.repo.slot(&edge, target).and_then(Value::as_ref_id) {
                    if self.repo.contains(next) {
                        out.insert(next.clone());
                    }
                }
            }
            Ok(out)
        };
        let mut frontier = BTreeSet::from([start.clone()]);
        for _ in 0..min_len {
            let mut next = BTreeSet::new();
            for node in &frontier {
                next.extend(successors(node)?);
            }
            frontier = next;
        }
        let mut reached = frontier.clone();
        let mut queue: Vec<ObjId> = frontier.into_iter().collect();
        while let Some(node) = queue.pop() {
            for next in successors(&node)? {
                if reached.insert(next.clone()) {
                    queue.push(next);
                }
            }
        }
        Ok(reached)
    }

    /// Creates a root instance of `class` in `resource` and sets its slots.
    /// The class must belong to the metamodel after the adaptation.
    pub fn store_result<'s>(
        &mut self,
        resource: &str,
        class: &str,
        slots: impl IntoIterator<Item = (&'s str, Value)>,
    ) -> Result<ObjId, MigrationError> {
        if self.after.class(class).is_none() {
            return Err(ModelError::UnknownClass(class.to_owned()).into());
        }
        let id = self.new_instance(resource, class)?;
        for (feature, value) in slots {
            self.write_slot(&id, feature, SlotWrite::Set(value))?;
        }
        Ok(id)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TransactionOutcome {
    Committed {
        warnings: Vec<String>,
    },
    RolledBack {
        violations: Vec<Violation>,
        failure: Option<String>,
        warnings: Vec<String>,
    },
}

impl TransactionOutcome {
    pub fn is_committed(&self) -> bool {
        matches!(self, TransactionOutcome::Committed { .. })
    }
}

static NO_PARAMS: BTreeMap<String, String> = BTreeMap::new();

/// Runs `body` with conformance checks suspended, then commits if the
/// repository conforms to `after` and restores the starting state otherwise.
pub fn run_transaction(
    repo: &mut Repository,
    before: &Metamodel,
    after: &Metamodel,
    body: impl FnOnce(&mut Context<'_>) -> Result<(), MigrationError>,
) -> TransactionOutcome {
    transaction(repo, before, after, &NO_PARAMS, body)
}

fn transaction(
    repo: &mut Repository,
    before: &Metamodel,
    after: &Metamodel,
    params: &BTreeMap<String, String>,
    body: impl FnOnce(&mut Context<'_>) -> Result<(), MigrationError>,
) -> TransactionOutcome {
    let snapshot = repo.clone();
    let mut ctx = Context {
        repo: &mut *repo,
        before,
        after,
        params,
        warnings: Vec::new(),
    };
    let result = body(&mut ctx);
    let warnings = ctx.warnings;
    let (violations, failure) = match result {
        Err(e) => (Vec::new(), Some(e.to_string())),
        Ok(()) => (repo.check_conformance(after), None),
    };
    if violations.is_empty() && failure.is_none() {
        return TransactionOutcome::Committed { warnings };
    }
    *repo = snapshot;
    TransactionOutcome::RolledBack {
        violations,
        failure,
        warnings,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum StepStatus {
    Ok,
    RolledBack,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StepReport {
    /// `<release>.<index>` of the executed change.
    pub change_ref: String,
    pub description: String,
    pub status: StepStatus,
    pub warnings: Vec<String>,
    pub violations: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MigrationReport {
    pub steps: Vec<StepReport>,
    pub final_release: usize,
}

impl MigrationReport {
    pub fn rolled_back(&self) -> bool {
        self.steps.iter().any(|s| s.status == StepStatus::RolledBack)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &str> {
        self.steps.iter().flat_map(|s| s.warnings.iter().map(String::as_str))
    }
}

pub type Hook = Box<dyn Fn(&mut Context<'_>) -> Result<(), MigrationError> + Send + Sync>;

/// Hook registry plus string parameters handed to hooks.
#[derive(Default)]
pub struct Engine {
    hooks: BTreeMap<String, Hook>,
    params: BTreeMap<String, String>,
}

impl Engine {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register_hook(
        &mut self,
        name: &str,
        body: impl Fn(&mut Context<'_>) -> Result<(), MigrationError> + Send + Sync + 'static,
    ) -> Result<(), EngineError> {
        if self.hooks.contains_key(name) {
            return Err(EngineError::DuplicateHook(name.to_owned()));
        }
        self.hooks.insert(name.to_owned(), Box::new(body));
        Ok(())
    }

    pub fn has_hook(&self, name: &str) -> bool {
        self.hooks.contains_key(name)
    }

    pub fn set_param(&mut self, name: &str, value: &str) {
        self.params.insert(name.to_owned(), value.to_owned());
    }

    /// Replays the changes of releases `(from, to]` over `repo`. A rolled-back
    /// step ends the run and leaves `repo` exactly as it was passed in.
    pub fn migrate(
        &self,
        repo: &mut Repository,
        history: &History,
        from: usize,
        to: usize,
    ) -> Result<MigrationReport, EngineError> {
        if from > to {
            return Err(EngineError::InvalidRange { from, to });
        }
        let mut mm = history.reconstruct(from)?;
        history.reconstruct(to)?;
        let violations = repo.check_conformance(&mm);
        if !violations.is_empty() {
            return Err(EngineError::NonconformingInput { release: from, violations });
        }
        let pending: Vec<(usize, usize, &Change)> = (from + 1..=to)
            .flat_map(|r| {
                history.releases[r]
                    .changes
                    .iter()
                    .enumerate()
                    .map(move |(i, c)| (r, i, c))
            })
            .collect();
        for (_, _, change) in &pending {
            if let Change::Composite(c) = change {
                if let Some(name) = c.migration.as_deref().filter(|n| !self.has_hook(n)) {
                    return Err(EngineError::UnknownHook(name.to_owned()));
                }
            }
        }

        let snapshot = repo.clone();
        let mut steps = Vec::new();
        for (release, index, change) in pending {
            let mut after = mm.clone();
            history::apply_change(&mut after, change).map_err(|error| HistoryError::Corrupt {
                release,
                change: index,
                error,
            })?;
            let outcome = transaction(repo, &mm, &after, &self.params, |ctx| self.migrate_change(change, ctx));
            let mut step = StepReport {
                change_ref: format!("{release}.{index}"),
                description: change.to_string(),
                status: StepStatus::Ok,
                warnings: Vec::new(),
                violations: Vec::new(),
                failure: None,
            };
            match outcome {
                TransactionOutcome::Committed { warnings } => step.warnings = warnings,
                TransactionOutcome::RolledBack {
                    violations,
                    failure,
                    warnings,
                } => {
                    step.status = StepStatus::RolledBack;
                    step.warnings = warnings;
                    step.violations = violations.iter().map(ToString::to_string).collect();
                    step.failure = failure;
                    steps.push(step);
                    *repo = snapshot;
                    return Ok(MigrationReport {
                        steps,
                        final_release: from,
                    });
                }
            }
            steps.push(step);
            mm = after;
        }
        repo.release = to as u32;
        repo.metamodel = history.metamodel.clone();
        Ok(MigrationReport {
            steps,
            final_release: to,
        })
    }

    fn migrate_change(&self, change: &Change, ctx: &mut Context<'_>) -> Result<(), MigrationError> {
        match change {
            Change::Primitive(p) => default_migration(p, ctx),
            Change::Operation(op) => operations::migrate(&op.operation, &op.arguments, ctx),
            Change::Composite(c) => match &c.migration {
                Some(name) => {
                    let hook = self
                        .hooks
                        .get(name)
                        .ok_or_else(|| MigrationError::Custom(format!("no migration hook named `{name}`")))?;
                    hook(ctx)
                }
                None => {
                    let mut before = ctx.before().clone();
                    for child in &c.children {
                        let mut after = before.clone();
                        history::apply_primitive(&mut after, child)
                            .map_err(|e| MigrationError::Custom(e.to_string()))?;
                        let mut inner = Context {
                            repo: &mut *ctx.repo,
                            before: &before,
                            after: &after,
                            params: ctx.params,
                            warnings: Vec::new(),
                        };
                        default_migration(child, &mut inner)?;
                        let warnings = inner.warnings;
                        ctx.warnings.extend(warnings);
                        before = after;
                    }
                    Ok(())
                }
            },
        }
    }
}

/// Model migration of a bare primitive change: deletions drop slots or
/// instances, renames re-key or retype, everything else is identity.
pub fn default_migration(p: &PrimitiveChange, ctx: &mut Context<'_>) -> Result<(), MigrationError> {
    let before = ctx.before();
    match p.kind {
        PrimitiveKind::Rename => match p.arguments.get("newName") {
            Some(Scalar::Str(new_name)) => operations::rename_in_model(ctx, &p.target, new_name),
            _ => Err(MigrationError::Custom(format!("RENAME {} lacks `newName`", p.target))),
        },
        PrimitiveKind::DeleteFeature => {
            let (owner, feature) = before.resolve_feature(&p.target)?;
            let name = p.target.member().unwrap_or_default();
            let containment = feature.as_reference().is_some_and(|r| r.containment);
            for id in ctx.repo().all_instances(before, &owner.name, true)? {
                if containment {
                    let children: Vec<ObjId> = ctx
                        .repo()
                        .slot(&id, name)
                        .map(|v| v.refs().cloned().collect())
                        .unwrap_or_default();
                    for child in &children {
                        if ctx.repo().contains(child) {
                            ctx.delete_instance(child)?;
                        }
                    }
                }
                ctx.repo_mut().put_slot_raw(&id, name, None)?;
            }
            Ok(())
        }
        PrimitiveKind::DeleteClass => {
            for id in ctx.repo().all_instances(before, p.target.head(), false)? {
                if ctx.repo().contains(&id) {
                    ctx.delete_instance(&id)?;
                }
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::helloworld::fixtures;
    use crate::model::ViolationKind;

    #[test]
    fn identity_body_commits() {
        let mm = fixtures::graph1();
        let mut repo = fixtures::g_a();
        let outcome = run_transaction(&mut repo, &mm, &mm, |_| Ok(()));
        assert!(outcome.is_committed());
        assert_eq!(repo, fixtures::g_a());
    }

    #[test]
    fn dropping_optional_slots_commits() {
        let mm = fixtures::graph1();
        let mut repo = fixtures::g_a();
        let outcome = run_transaction(&mut repo, &mm, &mm, |ctx| {
            for node in ctx.all_instances("Node", true)? {
                ctx.write_slot(&node, "name", SlotWrite::Unset)?;
            }
            Ok(())
        });
        assert!(outcome.is_committed());
        assert_eq!(repo.slot(&ObjId::new("n1"), "name"), None);
    }

    #[test]
    fn type_mismatch_rolls_back() {
        let mm = fixtures::graph1();
        let mut repo = fixtures::g_a();
        let outcome = run_transaction(&mut repo, &mm, &mm, |ctx| {
            ctx.repo_mut().put_slot_raw(&ObjId::new("e1"), "src", Some(Value::str("n1")))?;
            Ok(())
        });
        match outcome {
            TransactionOutcome::RolledBack { violations, .. } => {
                assert!(violations.iter().any(|v| v.kind == ViolationKind::TypeMismatch));
            }
            other => panic!("expected rollback, got {other:?}"),
        }
        assert_eq!(repo, fixtures::g_a());
    }

    #[test]
    fn body_failure_rolls_back() {
        let mm = fixtures::graph1();
        let mut repo = fixtures::g_a();
        let outcome = run_transaction(&mut repo, &mm, &mm, |ctx| {
            ctx.delete_instance(&ObjId::new("n1"))?;
            Err(MigrationError::Custom("boom".into()))
        });
        assert!(matches!(outcome, TransactionOutcome::RolledBack { failure: Some(ref f), .. } if f == "boom"));
        assert_eq!(repo, fixtures::g_a());
    }

    #[test]
    fn duplicate_and_unknown_hooks() {
        let mut engine = Engine::new();
        engine.register_hook("CountNodes", |_| Ok(())).unwrap();
        assert_eq!(
            engine.register_hook("CountNodes", |_| Ok(())),
            Err(EngineError::DuplicateHook("CountNodes".into()))
        );
        let history = fixtures::task_history("Missing");
        let mut repo = fixtures::g_a();
        let err = engine.migrate(&mut repo, &history, 0, 1).unwrap_err();
        assert_eq!(err, EngineError::UnknownHook("Missing".into()));
        assert_eq!(repo, fixtures::g_a());
    }

    #[test]
    fn store_result_appends_roots() {
        let mm = fixtures::with_results(fixtures::graph1());
        let mut repo = Repository::new("Graph1", 0);
        let outcome = run_transaction(&mut repo, &mm, &mm, |ctx| {
            ctx.store_result("result", "IntResult", [("value", Value::Int(4))])?;
            ctx.store_result("result", "IntResult", [("value", Value::Int(5))])?;
            assert!(matches!(
                ctx.store_result("result", "Nope", []),
                Err(MigrationError::Model(ModelError::UnknownClass(_)))
            ));
            Ok(())
        });
        assert!(outcome.is_committed());
        assert_eq!(repo.resource("result").unwrap().roots.len(), 2);
    }

    #[test]
    fn same_release_is_identity() {
        let engine = Engine::new();
        let history = fixtures::hist_simple();
        let mut repo = fixtures::g_a();
        let report = engine.migrate(&mut repo, &history, 0, 0).unwrap();
        assert!(report.steps.is_empty());
        assert_eq!(report.final_release, 0);
        assert_eq!(repo, fixtures::g_a());
        assert!(matches!(
            engine.migrate(&mut repo, &history, 1, 0),
            Err(EngineError::InvalidRange { .. })
        ));
    }

    #[test]
    fn nonconforming_input_is_refused() {
        let engine = Engine::new();
        let history = fixtures::hist_topology();
        let mut repo = fixtures::g_a();
        repo.put_slot_raw(&ObjId::new("n1"), "name", Some(Value::Int(1))).unwrap();
        assert!(matches!(
            engine.migrate(&mut repo, &history, 0, 1),
            Err(EngineError::NonconformingInput { .. })
        ));
    }

    #[test]
    fn default_migrations_follow_primitives() {
        let base = fixtures::graph1();
        let mut h = History::create(&base).unwrap();
        h.release_head().unwrap();
        for p in [
            PrimitiveChange::new(PrimitiveKind::Rename, "Node.name").arg("newName", "label"),
            PrimitiveChange::new(PrimitiveKind::DeleteFeature, "Graph.edges"),
            PrimitiveChange::new(PrimitiveKind::DeleteClass, "Edge"),
        ] {
            h.record(Change::Primitive(p)).unwrap();
        }
        h.release_head().unwrap();
        let mut repo = fixtures::g_a();
        let report = Engine::new().migrate(&mut repo, &h, 0, 1).unwrap();
        assert!(!report.rolled_back(), "{report:?}");
        assert_eq!(repo.len(), 5);
        assert_eq!(repo.slot(&ObjId::new("n2"), "label"), Some(&Value::str("n2")));
        assert_eq!(repo.release, 1);
        assert_eq!(repo.check_conformance(&h.reconstruct(1).unwrap()), vec![]);
    }

    #[test]
    fn composite_without_migration_runs_children_in_order() {
        let mut h = History::create(&fixtures::graph1()).unwrap();
        h.release_head().unwrap();
        h.record(Change::Composite(history::CompositeChange {
            children: vec![
                PrimitiveChange::new(PrimitiveKind::Rename, "Node.name").arg("newName", "label"),
                PrimitiveChange::new(PrimitiveKind::DeleteFeature, "Node.label"),
            ],
            migration: None,
        }))
        .unwrap();
        h.release_head().unwrap();
        let mut repo = fixtures::g_a();
        let report = Engine::new().migrate(&mut repo, &h, 0, 1).unwrap();
        assert!(!report.rolled_back(), "{report:?}");
        assert!(repo.objects().all(|o| !o.slots.contains_key("name") && !o.slots.contains_key("label")));
    }

    #[test]
    fn reachability_on_sample_graph() {
        let mm = fixtures::graph1();
        let mut repo = fixtures::g_a();
        let ids = |names: &[&str]| names.iter().map(|n| ObjId::new(*n)).collect::<BTreeSet<_>>();
        let outcome = run_transaction(&mut repo, &mm, &mm, |ctx| {
            let reach = |n: &str, k| ctx.get_reachable(&ObjId::new(n), "Edge", "src", "trg", k);
            assert_eq!(reach("n1", 1)?, ids(&["n1", "n2", "n3"]));
            assert_eq!(reach("n1", 2)?, ids(&["n1", "n2", "n3"]));
            assert_eq!(reach("n4", 1)?, ids(&[]));
            assert!(reach("n1", 0).is_err());
            assert!(reach("zz", 1).is_err());
            Ok(())
        });
        assert!(outcome.is_committed());
    }
}
