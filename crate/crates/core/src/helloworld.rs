//! Graph task pack: fixtures, custom migration hooks and task table.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::engine::{Context, Engine, EngineError, MigrationError, MigrationReport};
use crate::history::History;
use crate::model::{ModelError, ObjId, Repository, SlotWrite, Value};

pub const GRAPH_RESOURCE: &str = "graph";
pub const RESULT_RESOURCE: &str = "result";
pub const MIGRATED_RESOURCE: &str = "migrated";

pub mod fixtures {
    use crate::history::{Change, History};
    use crate::metamodel::{Attribute, Class, Enumeration, Metamodel, Reference, Upper};
    use crate::model::{ObjId, Repository, SlotWrite, Value};
    use crate::operations::{arguments, Argument};

    use super::GRAPH_RESOURCE;

    const ONE: Upper = Upper::Bounded(1);
    const MANY: Upper = Upper::Unbounded;

    pub fn graph1() -> Metamodel {
        Metamodel::new("Graph1")
            .with_class(
                Class::new("Graph")
                    .with_reference(Reference::new("nodes", "Node", true, 0, MANY))
                    .with_reference(Reference::new("edges", "Edge", true, 0, MANY)),
            )
            .with_class(Class::new("Node").with_attribute(Attribute::new("name", "String", 0, ONE)))
            .with_class(
                Class::new("Edge")
                    .with_reference(Reference::new("src", "Node", false, 0, ONE))
                    .with_reference(Reference::new("trg", "Node", false, 0, ONE)),
            )
    }

    /// Graph with one containment over an abstract component class.
    pub fn graph_evolved() -> Metamodel {
        Metamodel::new("Graph1")
            .with_class(Class::new("Graph").with_reference(Reference::new("gcs", "GraphComponent", true, 0, MANY)))
            .with_class(Class::new("Node").with_super("GraphComponent"))
            .with_class(
                Class::new("Edge")
                    .with_super("GraphComponent")
                    .with_reference(Reference::new("src", "Node", false, 0, ONE))
                    .with_reference(Reference::new("trg", "Node", false, 0, ONE)),
            )
            .with_class(
                Class::new("GraphComponent")
                    .with_abstract(true)
                    .with_attribute(Attribute::new("text", "String", 0, ONE)),
            )
    }

    /// Nodes linked directly to each other.
    pub fn graph2() -> Metamodel {
        Metamodel::new("Graph1")
            .with_class(Class::new("Graph").with_reference(Reference::new("nodes", "Node", true, 0, MANY)))
            .with_class(
                Class::new("Node")
                    .with_attribute(Attribute::new("text", "String", 0, ONE))
                    .with_reference(Reference::new("linksTo", "Node", false, 0, MANY)),
            )
    }

    pub fn result_metamodel() -> Metamodel {
        Metamodel::new("Result")
            .with_class(Class::new("IntResult").with_attribute(Attribute::new("value", "Int", 1, ONE)))
            .with_class(Class::new("StringResult").with_attribute(Attribute::new("value", "String", 1, ONE)))
            .with_class(
                Class::new("Greeting")
                    .with_attribute(Attribute::new("text", "String", 0, ONE))
                    .with_reference(Reference::new("message", "GreetingMessage", true, 0, ONE))
                    .with_reference(Reference::new("person", "Person", true, 0, ONE)),
            )
            .with_class(Class::new("GreetingMessage").with_attribute(Attribute::new("text", "String", 1, ONE)))
            .with_class(Class::new("Person").with_attribute(Attribute::new("name", "String", 1, ONE)))
    }

    /// `mm` extended by the result classes.
    pub fn with_results(mut mm: Metamodel) -> Metamodel {
        mm.classes.extend(result_metamodel().classes);
        mm
    }

    pub fn shapes() -> Metamodel {
        Metamodel::new("Shapes")
            .with_class(Class::new("Drawing").with_reference(Reference::new("shapes", "Shape", true, 0, MANY)))
            .with_class(
                Class::new("Shape")
                    .with_attribute(Attribute::new("kind", "Kind", 1, ONE))
                    .with_attribute(Attribute::new("label", "String", 0, ONE)),
            )
            .with_enumeration(Enumeration::new("Kind", &["CIRCLE", "SQUARE"]))
    }

    /// The sample graph: nodes n1..n4; edges e1 n1→n2, e2 n2→n3, e3 n3→n1,
    /// e4 n2→n2 and e5 from n3 with no target.
    pub fn g_a() -> Repository {
        let edges = [
            ("e1", Some("n1"), Some("n2")),
            ("e2", Some("n2"), Some("n3")),
            ("e3", Some("n3"), Some("n1")),
            ("e4", Some("n2"), Some("n2")),
            ("e5", Some("n3"), None),
        ];
        graph(&["n1", "n2", "n3", "n4"], &edges)
    }

    /// A `Graph1` repository with one graph `g`; nodes are named after their ids.
    pub fn graph(nodes: &[&str], edges: &[(&str, Option<&str>, Option<&str>)]) -> Repository {
        let mm = graph1();
        let mut repo = Repository::new("Graph1", 0);
        let g = repo.new_instance_with_id(&mm, GRAPH_RESOURCE, "Graph", "g").expect("fresh id");
        let set = |repo: &mut Repository, id: &ObjId, feature: &str, write: SlotWrite| {
            repo.write_slot(&mm, id, feature, write).expect("fixture write");
        };
        for name in nodes {
            let n = repo.new_instance_with_id(&mm, GRAPH_RESOURCE, "Node", *name).expect("fresh id");
            set(&mut repo, &n, "name", SlotWrite::Set(Value::str(*name)));
            set(&mut repo, &g, "nodes", SlotWrite::Add(Value::Ref(n)));
        }
        for (id, src, trg) in edges {
            let e = repo.new_instance_with_id(&mm, GRAPH_RESOURCE, "Edge", *id).expect("fresh id");
            if let Some(src) = src {
                set(&mut repo, &e, "src", SlotWrite::Set(Value::reference(*src)));
            }
            if let Some(trg) = trg {
                set(&mut repo, &e, "trg", SlotWrite::Set(Value::reference(*trg)));
            }
            set(&mut repo, &g, "edges", SlotWrite::Add(Value::Ref(e)));
        }
        repo
    }

    fn record_release(mut history: History, changes: Vec<Change>) -> History {
        history.release_head().expect("baseline is valid");
        for change in changes {
            history.record(change).expect("fixture change applies");
        }
        history.release_head().expect("fixture release is valid");
        history
    }

    /// Release 1 turns the graph into components under `gcs`, then moves the
    /// graph resource.
    pub fn hist_simple() -> History {
        let list = |items: &[&str]| Argument::from(items);
        record_release(
            History::create(&graph1()).expect("valid"),
            vec![
                Change::operation(
                    "ExtractSuperClass",
                    arguments([("subClasses", list(&["Node", "Edge"])), ("superName", "GraphComponent".into())]),
                ),
                Change::operation(
                    "UniteReferences",
                    arguments([("references", list(&["Graph.nodes", "Graph.edges"])), ("unitedName", "gcs".into())]),
                ),
                Change::operation(
                    "PullUpFeature",
                    arguments([("feature", "Node.name".into()), ("superClass", "GraphComponent".into())]),
                ),
                Change::operation(
                    "Rename",
                    arguments([("element", "GraphComponent.name".into()), ("newName", "text".into())]),
                ),
                Change::custom_migration("MoveResult"),
            ],
        )
    }

    /// Release 1 replaces edges by direct node links and renames `name`.
    pub fn hist_topology() -> History {
        record_release(
            History::create(&graph1()).expect("valid"),
            vec![
                Change::operation(
                    "ClassToAssociation",
                    arguments([
                        ("class", "Edge".into()),
                        ("sourceRef", "src".into()),
                        ("targetRef", "trg".into()),
                        ("newRefName", "linksTo".into()),
                    ]),
                ),
                Change::operation("Rename", arguments([("element", "Node.name".into()), ("newName", "text".into())])),
            ],
        )
    }

    /// Graph metamodel plus result classes at release 0; release 1 holds a
    /// single empty adaptation running `hook`.
    pub fn task_history(hook: &str) -> History {
        record_release(
            History::create(&with_results(graph1())).expect("valid"),
            vec![Change::custom_migration(hook)],
        )
    }
}

const EDGE_SRC: &str = "Edge.src";
const EDGE_TRG: &str = "Edge.trg";

/// Nodes reachable from `node` by a directed path of at least `min_len` edges.
pub fn get_reachable(ctx: &Context<'_>, node: &ObjId, min_len: usize) -> Result<BTreeSet<ObjId>, MigrationError> {
    ctx.get_reachable(node, "Edge", "src", "trg", min_len)
}

fn endpoint(ctx: &Context<'_>, edge: &ObjId, feature: &str) -> Result<Option<ObjId>, MigrationError> {
    Ok(ctx
        .get_slot(edge, feature)?
        .as_ref()
        .and_then(Value::as_ref_id)
        .filter(|id| ctx.repo().contains(id))
        .cloned())
}

/// Direct successors over edges with both endpoints present.
fn successors(ctx: &Context<'_>, node: &ObjId) -> Result<BTreeSet<ObjId>, MigrationError> {
    let mut out = BTreeSet::new();
    for edge in ctx.get_inverse(node, EDGE_SRC)? {
        out.extend(endpoint(ctx, &edge, "trg")?);
    }
    Ok(out)
}

fn store_count(ctx: &mut Context<'_>, count: usize) -> Result<(), MigrationError> {
    ctx.store_result(RESULT_RESOURCE, "IntResult", [("value", Value::Int(count as i64))])?;
    Ok(())
}

fn constant_transformation(ctx: &mut Context<'_>) -> Result<(), MigrationError> {
    ctx.store_result(RESULT_RESOURCE, "Greeting", [("text", Value::str("Hello World"))])?;
    Ok(())
}

fn constant_transformation_references(ctx: &mut Context<'_>) -> Result<(), MigrationError> {
    let greeting = ctx.store_result(RESULT_RESOURCE, "Greeting", [])?;
    let message = ctx.store_result(RESULT_RESOURCE, "GreetingMessage", [("text", Value::str("Hello"))])?;
    let person = ctx.store_result(RESULT_RESOURCE, "Person", [("name", Value::str("TTC Participants"))])?;
    ctx.write_slot(&greeting, "message", SlotWrite::Set(Value::Ref(message)))?;
    ctx.write_slot(&greeting, "person", SlotWrite::Set(Value::Ref(person)))?;
    Ok(())
}

fn model_to_text(ctx: &mut Context<'_>) -> Result<(), MigrationError> {
    ctx.store_result(RESULT_RESOURCE, "StringResult", [("value", Value::str("Hello World!"))])?;
    Ok(())
}

fn count_nodes(ctx: &mut Context<'_>) -> Result<(), MigrationError> {
    let count = ctx.all_instances("Node", true)?.len();
    store_count(ctx, count)
}

fn count_looping_edges(ctx: &mut Context<'_>) -> Result<(), MigrationError> {
    let mut count = 0;
    for edge in ctx.all_instances("Edge", true)? {
        let src = endpoint(ctx, &edge, "src")?;
        if src.is_some() && src == endpoint(ctx, &edge, "trg")? {
            count += 1;
        }
    }
    store_count(ctx, count)
}

fn count_isolated_nodes(ctx: &mut Context<'_>) -> Result<(), MigrationError> {
    let mut count = 0;
    for node in ctx.all_instances("Node", true)? {
        if ctx.get_inverse(&node, EDGE_SRC)?.is_empty() && ctx.get_inverse(&node, EDGE_TRG)?.is_empty() {
            count += 1;
        }
    }
    store_count(ctx, count)
}

fn count_dangling_edges(ctx: &mut Context<'_>) -> Result<(), MigrationError> {
    let mut count = 0;
    for edge in ctx.all_instances("Edge", true)? {
        if endpoint(ctx, &edge, "src")?.is_none() || endpoint(ctx, &edge, "trg")?.is_none() {
            count += 1;
        }
    }
    store_count(ctx, count)
}

/// Directed 3-cycles, each counted once regardless of its starting node.
fn count_circles(ctx: &mut Context<'_>) -> Result<(), MigrationError> {
    let mut succ = BTreeMap::new();
    for node in ctx.all_instances("Node", true)? {
        if get_reachable(ctx, &node, 1)?.contains(&node) {
            succ.insert(node.clone(), successors(ctx, &node)?);
        }
    }
    let none = BTreeSet::new();
    let next = |n: &ObjId| succ.get(n).unwrap_or(&none);
    let mut ordered = 0;
    for a in succ.keys() {
        for b in next(a).iter().filter(|b| *b != a) {
            for c in next(b).iter().filter(|c| *c != a && *c != b) {
                if next(c).contains(a) {
                    ordered += 1;
                }
            }
        }
    }
    store_count(ctx, ordered / 3)
}

fn reverse_edges(ctx: &mut Context<'_>) -> Result<(), MigrationError> {
    for edge in ctx.all_instances("Edge", true)? {
        let src = ctx.get_slot(&edge, "src")?;
        let trg = ctx.get_slot(&edge, "trg")?;
        ctx.write_slot(&edge, "src", trg.map_or(SlotWrite::Unset, SlotWrite::Set))?;
        ctx.write_slot(&edge, "trg", src.map_or(SlotWrite::Unset, SlotWrite::Set))?;
    }
    Ok(())
}

/// Deletes every node named by the `name` parameter (default `n1`) together
/// with its incident edges.
fn delete_node_with_name(ctx: &mut Context<'_>) -> Result<(), MigrationError> {
    let name = ctx.param("name").unwrap_or("n1");
    let mut doomed = BTreeSet::new();
    for node in ctx.all_instances("Node", true)? {
        if ctx.get_slot(&node, "name")?.as_ref().and_then(Value::as_str) == Some(name) {
            doomed.extend(ctx.get_inverse(&node, EDGE_SRC)?);
            doomed.extend(ctx.get_inverse(&node, EDGE_TRG)?);
            doomed.insert(node);
        }
    }
    for id in doomed {
        if ctx.repo().contains(&id) {
            ctx.delete_instance(&id)?;
        }
    }
    Ok(())
}

/// Adds an edge a→c for every node pair connected by a longer path but not
/// by an edge. Pairs are computed first so new edges do not feed back.
fn insert_transitive_edges(ctx: &mut Context<'_>) -> Result<(), MigrationError> {
    let mut pairs = Vec::new();
    for a in ctx.all_instances("Node", true)? {
        let direct = successors(ctx, &a)?;
        for c in get_reachable(ctx, &a, 2)? {
            if !direct.contains(&c) {
                pairs.push((a.clone(), c));
            }
        }
    }
    for (a, c) in pairs {
        let graph = ctx.get_inverse(&a, "Graph.nodes")?.into_iter().next();
        let resource = match &graph {
            Some(g) => ctx.repo().object(g)?.resource().to_owned(),
            None => ctx.repo().object(&a)?.resource().to_owned(),
        };
        let edge = ctx.new_instance(&resource, "Edge")?;
        ctx.write_slot(&edge, "src", SlotWrite::Set(Value::Ref(a)))?;
        ctx.write_slot(&edge, "trg", SlotWrite::Set(Value::Ref(c)))?;
        if let Some(g) = graph {
            ctx.write_slot(&g, "edges", SlotWrite::Add(Value::Ref(edge)))?;
        }
    }
    Ok(())
}

/// Re-homes resource `fromResource` (default `graph`) into `toResource`
/// (default `migrated`).
fn move_result(ctx: &mut Context<'_>) -> Result<(), MigrationError> {
    let from = ctx.param("fromResource").unwrap_or(GRAPH_RESOURCE);
    let to = ctx.param("toResource").unwrap_or(MIGRATED_RESOURCE);
    let schema = ctx.schema();
    ctx.repo_mut().move_resource(&schema, from, to)?;
    Ok(())
}

type HookFn = fn(&mut Context<'_>) -> Result<(), MigrationError>;

pub const HOOKS: [(&str, HookFn); 12] = [
    ("ConstantTransformation", constant_transformation),
    ("ConstantTransformationReferences", constant_transformation_references),
    ("ModelToText", model_to_text),
    ("CountNodes", count_nodes),
    ("CountLoopingEdges", count_looping_edges),
    ("CountIsolatedNodes", count_isolated_nodes),
    ("CountCircles", count_circles),
    ("CountDanglingEdges", count_dangling_edges),
    ("ReverseEdges", reverse_edges),
    ("DeleteNodeWithName", delete_node_with_name),
    ("InsertTransitiveEdges", insert_transitive_edges),
    ("MoveResult", move_result),
];

/// An engine with every task hook registered.
pub fn standard_engine() -> Engine {
    let mut engine = Engine::new();
    for (name, hook) in HOOKS {
        engine.register_hook(name, hook).expect("hook names are unique");
    }
    engine
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Output {
    /// The result resource as a model document.
    Results,
    /// The whole migrated repository.
    Model,
    /// The value of the StringResult in the result resource, plus a newline.
    Text,
}

#[derive(Debug, Clone, Copy)]
pub enum TaskSource {
    Hook(&'static str),
    History(fn() -> History),
}

#[derive(Debug, Clone, Copy)]
pub struct TaskSpec {
    pub name: &'static str,
    pub input_resource: &'static str,
    pub output_resource: &'static str,
    pub source: TaskSource,
    pub output: Output,
}

impl TaskSpec {
    pub fn history(&self) -> History {
        match self.source {
            TaskSource::Hook(hook) => fixtures::task_history(hook),
            TaskSource::History(build) => build(),
        }
    }
}

const fn hook_task(name: &'static str, hook: &'static str, output: Output) -> TaskSpec {
    let output_resource = match output {
        Output::Model => GRAPH_RESOURCE,
        _ => RESULT_RESOURCE,
    };
    TaskSpec {
        name,
        input_resource: GRAPH_RESOURCE,
        output_resource,
        source: TaskSource::Hook(hook),
        output,
    }
}

pub static TASKS: [TaskSpec; 13] = [
    hook_task("hello", "ConstantTransformation", Output::Results),
    hook_task("hello-refs", "ConstantTransformationReferences", Output::Results),
    hook_task("hello-text", "ModelToText", Output::Text),
    hook_task("count-nodes", "CountNodes", Output::Results),
    hook_task("count-looping-edges", "CountLoopingEdges", Output::Results),
    hook_task("count-isolated-nodes", "CountIsolatedNodes", Output::Results),
    hook_task("count-circles", "CountCircles", Output::Results),
    hook_task("count-dangling-edges", "CountDanglingEdges", Output::Results),
    hook_task("reverse-edges", "ReverseEdges", Output::Model),
    TaskSpec {
        name: "simple-migration",
        input_resource: GRAPH_RESOURCE,
        output_resource: MIGRATED_RESOURCE,
        source: TaskSource::History(fixtures::hist_simple),
        output: Output::Model,
    },
    TaskSpec {
        name: "topology-migration",
        input_resource: GRAPH_RESOURCE,
        output_resource: GRAPH_RESOURCE,
        source: TaskSource::History(fixtures::hist_topology),
        output: Output::Model,
    },
    hook_task("delete-node", "DeleteNodeWithName", Output::Model),
    hook_task("insert-transitive-edges", "InsertTransitiveEdges", Output::Model),
];

pub fn task(name: &str) -> Option<&'static TaskSpec> {
    TASKS.iter().find(|t| t.name == name)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Artifact {
    Model(Repository),
    Text(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskRun {
    pub repo: Repository,
    pub report: MigrationReport,
    pub artifact: Artifact,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TaskError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("migration rolled back")]
    RolledBack(MigrationReport),
    #[error("task produced no {0}")]
    MissingOutput(&'static str),
    #[error("the task history has no closed release")]
    Unreleased,
}

/// Migrates `repo` from its release stamp to the last closed release of the
/// task's history and extracts the task output.
pub fn run_task(spec: &TaskSpec, mut repo: Repository, params: &BTreeMap<String, String>) -> Result<TaskRun, TaskError> {
    let history = spec.history();
    let mut engine = standard_engine();
    for (k, v) in params {
        engine.set_param(k, v);
    }
    let to = history.last_released().ok_or(TaskError::Unreleased)?;
    let from = repo.release as usize;
    let report = engine.migrate(&mut repo, &history, from, to)?;
    if report.rolled_back() {
        return Err(TaskError::RolledBack(report));
    }
    let artifact = match spec.output {
        Output::Model => Artifact::Model(repo.clone()),
        Output::Results => Artifact::Model(match repo.resource(spec.output_resource) {
            Some(_) => repo.extract_resource(spec.output_resource)?,
            None => Repository::new(&repo.metamodel, repo.release),
        }),
        Output::Text => {
            let resource = repo.resource(spec.output_resource).ok_or(TaskError::MissingOutput("text"))?;
            let value = resource
                .roots
                .iter()
                .filter(|id| repo.class_of(id).is_ok_and(|c| c == "StringResult"))
                .find_map(|id| repo.slot(id, "value").and_then(Value::as_str))
                .ok_or(TaskError::MissingOutput("text"))?;
            Artifact::Text(format!("{value}\n"))
        }
    };
    Ok(TaskRun { repo, report, artifact })
}
