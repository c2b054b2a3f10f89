//! Reusable coupled operations.
//!
//! Each operation pairs a metamodel adaptation with the model migration that
//! keeps instances conforming. Operations are parameterized by metamodel
//! elements and guarded by constraints; [`check_applicability`] reports which
//! constraints a given argument tuple violates.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{Context, MigrationError};
use crate::metamodel::{
    is_identifier, Attribute, Class, Enumeration, Feature, Metamodel, QualifiedName,
    Reference, Upper,
};
use crate::model::{Schema, SlotWrite, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ParamKind {
    Element,
    ElementList,
    String,
    Flag,
}

impl fmt::Display for ParamKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParamKind::Element => "ELEMENT",
            ParamKind::ElementList => "ELEMENT_LIST",
            ParamKind::String => "STRING",
            ParamKind::Flag => "FLAG",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Parameter {
    pub name: &'static str,
    pub kind: ParamKind,
    pub required: bool,
}

const fn param(name: &'static str, kind: ParamKind) -> Parameter {
    Parameter { name, kind, required: true }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OperationSignature {
    pub name: &'static str,
    pub parameters: Vec<Parameter>,
    pub description: &'static str,
}

impl fmt::Display for OperationSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.name)?;
        for (i, p) in self.parameters.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}:{}", p.name, p.kind)?;
            if !p.required {
                f.write_str("?")?;
            }
        }
        write!(f, ") — {}", self.description)
    }
}

/// An operation argument as recorded in a history.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Argument {
    Flag(bool),
    Text(String),
    List(Vec<String>),
}

impl From<&str> for Argument {
    fn from(text: &str) -> Self {
        Argument::Text(text.to_owned())
    }
}

impl From<&[&str]> for Argument {
    fn from(items: &[&str]) -> Self {
        Argument::List(items.iter().map(|s| (*s).to_owned()).collect())
    }
}

pub type Arguments = BTreeMap<String, Argument>;

/// Builds an argument map from `(name, value)` pairs.
pub fn arguments<const N: usize>(pairs: [(&str, Argument); N]) -> Arguments {
    pairs.into_iter().map(|(k, v)| (k.to_owned(), v)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConstraintViolation {
    pub operation: String,
    pub constraint: String,
    pub message: String,
    pub offending: Option<QualifiedName>,
}

impl fmt::Display for ConstraintViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.operation, self.constraint)?;
        if let Some(offending) = &self.offending {
            write!(f, " {offending}")?;
        }
        write!(f, ": {}", self.message)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OperationError {
    #[error("unknown operation `{0}`")]
    UnknownOperation(String),
    #[error("{operation}: bad argument `{parameter}`: {message}")]
    BadArgument {
        operation: String,
        parameter: String,
        message: String,
    },
    #[error("{} constraint violation(s): {}", .0.len(), join_violations(.0))]
    Violations(Vec<ConstraintViolation>),
}

fn join_violations(violations: &[ConstraintViolation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// Arguments checked against an operation signature.
#[derive(Debug, Clone)]
pub struct Args<'a> {
    operation: &'static str,
    values: &'a Arguments,
}

impl<'a> Args<'a> {
    pub fn parse(signature: &OperationSignature, values: &'a Arguments) -> Result<Self, OperationError> {
        let bad = |parameter: &str, message: String| OperationError::BadArgument {
            operation: signature.name.to_owned(),
            parameter: parameter.to_owned(),
            message,
        };
        for name in values.keys() {
            if !signature.parameters.iter().any(|p| p.name == name) {
                return Err(bad(name, "no such parameter".into()));
            }
        }
        for p in &signature.parameters {
            match (values.get(p.name), p.kind) {
                (None, _) if p.required => return Err(bad(p.name, "missing".into())),
                (None, _) => {}
                (Some(Argument::Text(_)), ParamKind::Element | ParamKind::String) => {}
                (Some(Argument::List(_)), ParamKind::ElementList) => {}
                (Some(Argument::Flag(_)), ParamKind::Flag) => {}
                (Some(other), kind) => return Err(bad(p.name, format!("expected {kind}, got {other:?}"))),
            }
        }
        Ok(Args { operation: signature.name, values })
    }

    fn text(&self, name: &str) -> &'a str {
        match self.values.get(name) {
            Some(Argument::Text(text)) => text,
            _ => "",
        }
    }

    fn element(&self, name: &str) -> QualifiedName {
        QualifiedName::new(self.text(name))
    }

    fn elements(&self, name: &str) -> Vec<QualifiedName> {
        match self.values.get(name) {
            Some(Argument::List(items)) => items.iter().map(|s| QualifiedName::new(s.clone())).collect(),
            _ => Vec::new(),
        }
    }
}

/// A reusable coupled operation: constraints, adaptation and migration.
pub trait CoupledOperation: Sync {
    fn signature(&self) -> OperationSignature;

    /// Constraint violations for `args` on `mm`; empty means applicable.
    fn check(&self, args: &Args<'_>, mm: &Metamodel) -> Vec<ConstraintViolation>;

    /// In-place metamodel edit. Only called after `check` returned nothing.
    fn adapt(&self, args: &Args<'_>, mm: &mut Metamodel);

    /// In-place model edit; the context carries the metamodels before and
    /// after [`CoupledOperation::adapt`].
    fn migrate(&self, args: &Args<'_>, ctx: &mut Context<'_>) -> Result<(), MigrationError>;
}

static REGISTRY: [&dyn CoupledOperation; 7] = [
    &Rename,
    &ExtractSuperClass,
    &UniteReferences,
    &PullUpFeature,
    &ClassToAssociation,
    &EnumerationToSubClasses,
    &SubClassesToEnumeration,
];

/// All registered operations in listing order.
pub fn registry() -> &'static [&'static dyn CoupledOperation] {
    &REGISTRY
}

pub fn lookup(name: &str) -> Result<&'static dyn CoupledOperation, OperationError> {
    REGISTRY
        .iter()
        .copied()
        .find(|op| op.signature().name == name)
        .ok_or_else(|| OperationError::UnknownOperation(name.to_owned()))
}

pub fn check_applicability(
    name: &str,
    args: &Arguments,
    mm: &Metamodel,
) -> Result<Vec<ConstraintViolation>, OperationError> {
    let op = lookup(name)?;
    let args = Args::parse(&op.signature(), args)?;
    Ok(op.check(&args, mm))
}

/// Checks and then applies the adaptation of `name` to `mm`.
pub fn adapt(name: &str, args: &Arguments, mm: &mut Metamodel) -> Result<(), OperationError> {
    let op = lookup(name)?;
    let parsed = Args::parse(&op.signature(), args)?;
    let violations = op.check(&parsed, mm);
    if !violations.is_empty() {
        return Err(OperationError::Violations(violations));
    }
    op.adapt(&parsed, mm);
    Ok(())
}

/// Runs the migration half of `name` inside an already prepared context.
pub fn migrate(name: &str, args: &Arguments, ctx: &mut Context<'_>) -> Result<(), MigrationError> {
    let op = lookup(name).map_err(|e| MigrationError::Custom(e.to_string()))?;
    let parsed = Args::parse(&op.signature(), args).map_err(|e| MigrationError::Custom(e.to_string()))?;
    op.migrate(&parsed, ctx)
}

struct Guard<'a> {
    operation: &'a str,
    out: Vec<ConstraintViolation>,
}

impl<'a> Guard<'a> {
    fn new(operation: &'a str) -> Self {
        Guard { operation, out: Vec::new() }
    }

    fn require(&mut self, ok: bool, constraint: &str, offending: Option<&QualifiedName>, message: impl Into<String>) -> bool {
        if !ok {
            self.out.push(ConstraintViolation {
                operation: self.operation.to_owned(),
                constraint: constraint.to_owned(),
                message: message.into(),
                offending: offending.cloned(),
            });
        }
        ok
    }

    fn fail(&mut self, constraint: &str, offending: Option<&QualifiedName>, message: impl Into<String>) {
        self.require(false, constraint, offending, message);
    }

    fn finish(self) -> Vec<ConstraintViolation> {
        self.out
    }
}

/// `true` if some reference names `owner.name` as its opposite.
fn is_opposite_of_something(mm: &Metamodel, owner: &str, name: &str) -> bool {
    mm.classes.iter().flat_map(|c| &c.references).any(|r| {
        r.opposite.as_deref() == Some(name)
            && mm.find_feature(&r.target, name).is_some_and(|(o, _)| o == owner)
    })
}

/// Own feature `qn` on the class named by its head, or a violation.
fn own_feature<'m>(guard: &mut Guard<'_>, mm: &'m Metamodel, qn: &QualifiedName) -> Option<(&'m Class, Feature<'m>)> {
    let Ok((owner, feature)) = mm.resolve_feature(qn) else {
        guard.fail("feature-exists", Some(qn), "no such feature");
        return None;
    };
    if owner.name != qn.head() {
        guard.fail(
            "declared-on-class",
            Some(qn),
            format!("feature is inherited from `{}`", owner.name),
        );
        return None;
    }
    Some((owner, feature))
}

fn same_definition(a: Feature<'_>, b: Feature<'_>) -> bool {
    match (a, b) {
        (Feature::Attribute(x), Feature::Attribute(y)) => x == y,
        (Feature::Reference(x), Feature::Reference(y)) => x == y,
        _ => false,
    }
}

// ---------------------------------------------------------------------------

pub struct Rename;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RenameTarget {
    Class,
    Enumeration,
    Feature,
    Literal,
}

fn rename_target(mm: &Metamodel, qn: &QualifiedName) -> Option<RenameTarget> {
    match qn.member() {
        None if mm.class(qn.head()).is_some() => Some(RenameTarget::Class),
        None if mm.enumeration(qn.head()).is_some() => Some(RenameTarget::Enumeration),
        Some(member) => match mm.enumeration(qn.head()) {
            Some(e) if e.literals.iter().any(|l| l == member) => Some(RenameTarget::Literal),
            Some(_) => None,
            None => mm.resolve_feature(qn).ok().map(|_| RenameTarget::Feature),
        },
        None => None,
    }
}

/// Constraint check shared by the `Rename` operation and primitive renames.
pub fn check_rename(mm: &Metamodel, element: &QualifiedName, new_name: &str) -> Vec<ConstraintViolation> {
    let mut guard = Guard::new("Rename");
    guard.require(is_identifier(new_name), "identifier", None, format!("`{new_name}` is not an identifier"));
    let Some(target) = rename_target(mm, element) else {
        guard.fail("element-exists", Some(element), "no such class, enumeration, feature or literal");
        return guard.finish();
    };
    let old = element.member().unwrap_or(element.head());
    guard.require(old != new_name, "not-identical", Some(element), "new name equals the current name");
    match target {
        RenameTarget::Class | RenameTarget::Enumeration => {
            guard.require(
                !mm.type_name_in_use(new_name) || old == new_name,
                "name-free",
                Some(element),
                format!("type name `{new_name}` is already in use"),
            );
        }
        RenameTarget::Feature => {
            let (owner, _) = mm.resolve_feature(element).expect("checked above");
            guard.require(
                old == new_name || !mm.feature_names_in_hierarchy(&owner.name).contains(new_name),
                "name-free",
                Some(element),
                format!("feature name `{new_name}` is already used in the hierarchy of `{}`", owner.name),
            );
        }
        RenameTarget::Literal => {
            let e = mm.enumeration(element.head()).expect("checked above");
            guard.require(
                old == new_name || !e.literals.iter().any(|l| l == new_name),
                "name-free",
                Some(element),
                format!("literal `{new_name}` already exists"),
            );
        }
    }
    guard.finish()
}

/// Metamodel half of a rename, including every place that mentions the old
/// name.
pub fn rename_in_metamodel(mm: &mut Metamodel, element: &QualifiedName, new_name: &str) {
    let Some(target) = rename_target(mm, element) else { return };
    match target {
        RenameTarget::Class => {
            let old = element.head().to_owned();
            for class in &mut mm.classes {
                if class.name == old {
                    class.name = new_name.to_owned();
                }
                for sup in &mut class.super_types {
                    if *sup == old {
                        *sup = new_name.to_owned();
                    }
                }
                for r in &mut class.references {
                    if r.target == old {
                        r.target = new_name.to_owned();
                    }
                }
            }
        }
        RenameTarget::Enumeration => {
            let old = element.head().to_owned();
            if let Some(e) = mm.enumeration_mut(&old) {
                e.name = new_name.to_owned();
            }
            for a in mm.classes.iter_mut().flat_map(|c| c.attributes.iter_mut()) {
                if a.type_name == old {
                    a.type_name = new_name.to_owned();
                }
            }
        }
        RenameTarget::Literal => {
            let old = element.member().unwrap_or_default().to_owned();
            if let Some(e) = mm.enumeration_mut(element.head()) {
                for literal in &mut e.literals {
                    if *literal == old {
                        *literal = new_name.to_owned();
                    }
                }
            }
        }
        RenameTarget::Feature => {
            let old = element.member().unwrap_or_default().to_owned();
            let (owner, feature) = mm.resolve_feature(element).expect("checked above");
            let owner = owner.name.clone();
            let opposite_end = feature
                .as_reference()
                .and_then(|r| Some((r.target.clone(), r.opposite.clone()?)))
                .and_then(|(target, opposite)| {
                    mm.find_feature(&target, &opposite).map(|(o, _)| (o.to_owned(), opposite))
                });
            let class = mm.class_mut(&owner).expect("owner exists");
            for a in &mut class.attributes {
                if a.name == old {
                    a.name = new_name.to_owned();
                }
            }
            for r in &mut class.references {
                if r.name == old {
                    r.name = new_name.to_owned();
                }
            }
            if let Some((opposite_owner, opposite)) = opposite_end {
                if let Some(r) = mm
                    .class_mut(&opposite_owner)
                    .and_then(|c| c.references.iter_mut().find(|r| r.name == opposite))
                {
                    r.opposite = Some(new_name.to_owned());
                }
            }
        }
    }
}

/// Model half of a rename: re-keys slots, retypes instances, or rewrites
/// literal values. Resolves `element` against the metamodel before.
pub fn rename_in_model(ctx: &mut Context<'_>, element: &QualifiedName, new_name: &str) -> Result<(), MigrationError> {
    let before = ctx.before();
    let Some(target) = rename_target(before, element) else {
        return Ok(());
    };
    match target {
        RenameTarget::Class => {
            let old = element.head();
            for id in ctx.repo().all_instances(before, old, false)? {
                ctx.repo_mut().retype(&id, new_name)?;
            }
        }
        RenameTarget::Enumeration => {}
        RenameTarget::Feature => {
            let (owner, _) = before.resolve_feature(element)?;
            let old = element.member().unwrap_or_default();
            for id in ctx.repo().all_instances(before, &owner.name, true)? {
                ctx.repo_mut().rekey_slot(&id, old, new_name)?;
            }
        }
        RenameTarget::Literal => {
            let enumeration = element.head();
            let old = Value::str(element.member().unwrap_or_default());
            let mut edits = Vec::new();
            for obj in ctx.repo().objects() {
                for (feature, value) in &obj.slots {
                    let typed = before
                        .find_feature(&obj.class, feature)
                        .is_some_and(|(_, f)| matches!(f, Feature::Attribute(a) if a.type_name == enumeration));
                    if typed && value.items().contains(&old) {
                        let replaced = match value {
                            Value::List(items) => Value::List(
                                items
                                    .iter()
                                    .map(|v| if *v == old { Value::str(new_name) } else { v.clone() })
                                    .collect(),
                            ),
                            _ => Value::str(new_name),
                        };
                        edits.push((obj.id.clone(), feature.clone(), replaced));
                    }
                }
            }
            for (id, feature, value) in edits {
                ctx.repo_mut().put_slot_raw(&id, &feature, Some(value))?;
            }
        }
    }
    Ok(())
}

impl CoupledOperation for Rename {
    fn signature(&self) -> OperationSignature {
        OperationSignature {
            name: "Rename",
            parameters: vec![param("element", ParamKind::Element), param("newName", ParamKind::String)],
            description: "rename a class, enumeration, feature or literal",
        }
    }

    fn check(&self, args: &Args<'_>, mm: &Metamodel) -> Vec<ConstraintViolation> {
        check_rename(mm, &args.element("element"), args.text("newName"))
    }

    fn adapt(&self, args: &Args<'_>, mm: &mut Metamodel) {
        rename_in_metamodel(mm, &args.element("element"), args.text("newName"));
    }

    fn migrate(&self, args: &Args<'_>, ctx: &mut Context<'_>) -> Result<(), MigrationError> {
        rename_in_model(ctx, &args.element("element"), args.text("newName"))
    }
}

// ---------------------------------------------------------------------------

pub struct ExtractSuperClass;

impl CoupledOperation for ExtractSuperClass {
    fn signature(&self) -> OperationSignature {
        OperationSignature {
            name: "ExtractSuperClass",
            parameters: vec![param("subClasses", ParamKind::ElementList), param("superName", ParamKind::String)],
            description: "create an abstract common super class for the given classes",
        }
    }

    fn check(&self, args: &Args<'_>, mm: &Metamodel) -> Vec<ConstraintViolation> {
        let mut guard = Guard::new(args.operation);
        let subs = args.elements("subClasses");
        let super_name = args.text("superName");
        guard.require(!subs.is_empty(), "at-least-one-subclass", None, "no subclasses given");
        let mut seen = BTreeSet::new();
        for sub in &subs {
            if sub.member().is_some() || mm.class(sub.head()).is_none() {
                guard.fail("subclass-exists", Some(sub), "not a class");
            }
            guard.require(seen.insert(sub.as_str()), "distinct-subclasses", Some(sub), "listed twice");
        }
        guard.require(is_identifier(super_name), "identifier", None, format!("`{super_name}` is not an identifier"));
        guard.require(
            !mm.type_name_in_use(super_name),
            "name-free",
            None,
            format!("type name `{super_name}` is already in use"),
        );
        guard.finish()
    }

    fn adapt(&self, args: &Args<'_>, mm: &mut Metamodel) {
        let super_name = args.text("superName");
        mm.classes.push(Class::new(super_name).with_abstract(true));
        for sub in args.elements("subClasses") {
            if let Some(class) = mm.class_mut(sub.head()) {
                class.super_types.push(super_name.to_owned());
            }
        }
    }

    fn migrate(&self, _args: &Args<'_>, _ctx: &mut Context<'_>) -> Result<(), MigrationError> {
        Ok(())
    }
}

// ---------------------------------------------------------------------------

pub struct UniteReferences;

/// Most specific classes every one of `classes` is a subtype of.
fn most_specific_common_supertypes(mm: &Metamodel, classes: &[&str]) -> Vec<String> {
    let mut common: Option<BTreeSet<String>> = None;
    for class in classes {
        let closure = mm.supertype_closure(class);
        common = Some(match common {
            None => closure,
            Some(acc) => acc.intersection(&closure).cloned().collect(),
        });
    }
    let common = common.unwrap_or_default();
    common
        .iter()
        .filter(|s| mm.class(s).is_some())
        .filter(|s| !common.iter().any(|t| t != *s && mm.supertype_closure(t).contains(*s)))
        .cloned()
        .collect()
}

impl CoupledOperation for UniteReferences {
    fn signature(&self) -> OperationSignature {
        OperationSignature {
            name: "UniteReferences",
            parameters: vec![param("references", ParamKind::ElementList), param("unitedName", ParamKind::String)],
            description: "replace references of one class by a single reference typed by their common super class",
        }
    }

    fn check(&self, args: &Args<'_>, mm: &Metamodel) -> Vec<ConstraintViolation> {
        let mut guard = Guard::new(args.operation);
        let refs = args.elements("references");
        let united = args.text("unitedName");
        guard.require(refs.len() >= 2, "at-least-two", None, "need at least two references");
        let mut resolved: Vec<&Reference> = Vec::new();
        let mut seen = BTreeSet::new();
        for qn in &refs {
            guard.require(seen.insert(qn.as_str()), "distinct-references", Some(qn), "listed twice");
            let Some((owner, feature)) = own_feature(&mut guard, mm, qn) else { continue };
            let Some(reference) = feature.as_reference() else {
                guard.fail("is-reference", Some(qn), "not a reference");
                continue;
            };
            guard.require(
                reference.opposite.is_none() && !is_opposite_of_something(mm, &owner.name, &reference.name),
                "no-opposite",
                Some(qn),
                "reference takes part in an opposite pair",
            );
            resolved.push(reference);
        }
        if resolved.len() != refs.len() || refs.len() < 2 {
            return guard.finish();
        }
        let owners: BTreeSet<&str> = refs.iter().map(|qn| qn.head()).collect();
        guard.require(owners.len() == 1, "same-class", None, "references are declared on different classes");
        let containment: BTreeSet<bool> = resolved.iter().map(|r| r.containment).collect();
        guard.require(containment.len() == 1, "same-containment", None, "containment flags differ");
        let targets: Vec<&str> = resolved.iter().map(|r| r.target.as_str()).collect();
        let candidates = most_specific_common_supertypes(mm, &targets);
        match candidates.len() {
            0 => guard.fail("common-supertype", None, "targets share no common super class"),
            1 => {}
            _ => guard.fail(
                "unambiguous-supertype",
                None,
                format!("ambiguous common super classes: {}", candidates.join(", ")),
            ),
        }
        guard.require(is_identifier(united), "identifier", None, format!("`{united}` is not an identifier"));
        if owners.len() == 1 {
            let owner = refs[0].head();
            let originals: BTreeSet<&str> = resolved.iter().map(|r| r.name.as_str()).collect();
            guard.require(
                originals.contains(united) || !mm.feature_names_in_hierarchy(owner).contains(united),
                "name-free",
                None,
                format!("feature name `{united}` is already used in the hierarchy of `{owner}`"),
            );
        }
        guard.finish()
    }

    fn adapt(&self, args: &Args<'_>, mm: &mut Metamodel) {
        let refs = args.elements("references");
        let owner = refs[0].head().to_owned();
        let names: Vec<&str> = refs.iter().filter_map(QualifiedName::member).collect();
        let class = mm.class(&owner).expect("checked");
        let targets: Vec<&str> = names
            .iter()
            .filter_map(|n| class.references.iter().find(|r| r.name == *n))
            .map(|r| r.target.as_str())
            .collect();
        let target = most_specific_common_supertypes(mm, &targets).remove(0);
        let containment = class.references.iter().any(|r| r.name == names[0] && r.containment);
        let class = mm.class_mut(&owner).expect("checked");
        let position = class
            .references
            .iter()
            .position(|r| names.contains(&r.name.as_str()))
            .unwrap_or(class.references.len());
        class.references.retain(|r| !names.contains(&r.name.as_str()));
        class.references.insert(
            position.min(class.references.len()),
            Reference::new(args.text("unitedName"), &target, containment, 0, Upper::Unbounded),
        );
    }

    fn migrate(&self, args: &Args<'_>, ctx: &mut Context<'_>) -> Result<(), MigrationError> {
        let refs = args.elements("references");
        let united = args.text("unitedName");
        let owner = refs[0].head();
        let names: Vec<&str> = refs.iter().filter_map(QualifiedName::member).collect();
        let before = ctx.before();
        for id in ctx.repo().all_instances(before, owner, true)? {
            let mut values = Vec::new();
            for name in &names {
                if let Some(value) = ctx.repo().slot(&id, name) {
                    values.extend(value.items().iter().cloned());
                }
            }
            for name in &names {
                ctx.repo_mut().put_slot_raw(&id, name, None)?;
            }
            ctx.repo_mut().put_slot_raw(&id, united, Some(Value::List(values)))?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------

pub struct PullUpFeature;

impl PullUpFeature {
    /// Classes whose own declaration of the feature is merged into the
    /// super class, the pulled feature's class first.
    fn merged_owners(mm: &Metamodel, declaring: &str, super_class: &str, name: &str) -> Vec<String> {
        let mut owners = vec![declaring.to_owned()];
        owners.extend(
            mm.subclasses_of(super_class)
                .into_iter()
                .filter(|c| c.name != declaring && c.own_feature(name).is_some())
                .map(|c| c.name.clone()),
        );
        owners
    }
}

impl CoupledOperation for PullUpFeature {
    fn signature(&self) -> OperationSignature {
        OperationSignature {
            name: "PullUpFeature",
            parameters: vec![param("feature", ParamKind::Element), param("superClass", ParamKind::Element)],
            description: "move a feature from a class to one of its super classes",
        }
    }

    fn check(&self, args: &Args<'_>, mm: &Metamodel) -> Vec<ConstraintViolation> {
        let mut guard = Guard::new(args.operation);
        let qn = args.element("feature");
        let super_qn = args.element("superClass");
        let Some((declaring, feature)) = own_feature(&mut guard, mm, &qn) else {
            return guard.finish();
        };
        let Some(super_class) = mm.class(super_qn.head()).filter(|_| super_qn.member().is_none()) else {
            guard.fail("superclass-exists", Some(&super_qn), "not a class");
            return guard.finish();
        };
        if !guard.require(
            declaring.name != super_class.name && mm.is_subtype(&declaring.name, &super_class.name),
            "is-subclass",
            Some(&super_qn),
            format!("`{}` is not a proper subclass of `{}`", declaring.name, super_class.name),
        ) {
            return guard.finish();
        }
        let name = feature.name();
        guard.require(
            !mm.all_features(&super_class.name)
                .unwrap_or_default()
                .iter()
                .any(|(_, f)| f.name() == name),
            "name-free-in-superclass",
            Some(&super_qn),
            format!("`{}` already has a feature `{name}`", super_class.name),
        );
        let in_pair = feature.as_reference().is_some_and(|r| r.opposite.is_some())
            || is_opposite_of_something(mm, &declaring.name, name);
        guard.require(!in_pair, "no-opposite", Some(&qn), "feature takes part in an opposite pair");

        let merged = Self::merged_owners(mm, &declaring.name, &super_class.name, name);
        let mut scope = vec![super_class];
        scope.extend(mm.subclasses_of(&super_class.name));
        for class in scope {
            for (owner, f) in mm.all_features(&class.name).unwrap_or_default() {
                if f.name() == name && !merged.iter().any(|m| m == owner) {
                    guard.fail(
                        "no-clash",
                        Some(&QualifiedName::member_of(&class.name, name)),
                        format!("`{owner}.{name}` would clash with the pulled-up feature"),
                    );
                }
            }
        }

        let merging = merged.len() > 1 || feature.lower() > 0;
        if merging {
            for other in &merged[1..] {
                let other_feature = mm.class(other).and_then(|c| c.own_feature(name)).expect("declares it");
                guard.require(
                    same_definition(feature, other_feature),
                    "identical-definitions",
                    Some(&QualifiedName::member_of(other, name)),
                    "declarations differ",
                );
            }
            for sub in mm.direct_subclasses_of(&super_class.name) {
                guard.require(
                    merged.contains(&sub.name),
                    "every-subclass-declares",
                    Some(&QualifiedName::new(sub.name.clone())),
                    format!("`{}` does not declare `{name}`", sub.name),
                );
            }
            for other in &merged {
                guard.require(
                    mm.class(other).is_some_and(|c| c.super_types.contains(&super_class.name)),
                    "direct-subclass",
                    Some(&QualifiedName::member_of(other, name)),
                    format!("`{other}` is not a direct subclass of `{}`", super_class.name),
                );
            }
            if feature.lower() > 0 {
                guard.require(
                    super_class.is_abstract,
                    "abstract-superclass",
                    Some(&super_qn),
                    "a mandatory feature can only be pulled up to an abstract class",
                );
            }
        }
        guard.finish()
    }

    fn adapt(&self, args: &Args<'_>, mm: &mut Metamodel) {
        let qn = args.element("feature");
        let super_name = args.element("superClass").head().to_owned();
        let name = qn.member().unwrap_or_default().to_owned();
        let declaring = qn.head().to_owned();
        let merged = Self::merged_owners(mm, &declaring, &super_name, &name);
        let class = mm.class(&declaring).expect("checked");
        let attribute = class.attributes.iter().find(|a| a.name == name).cloned();
        let reference = class.references.iter().find(|r| r.name == name).cloned();
        for owner in &merged {
            if let Some(c) = mm.class_mut(owner) {
                c.remove_feature(&name);
            }
        }
        let target = mm.class_mut(&super_name).expect("checked");
        if let Some(a) = attribute {
            target.attributes.push(a);
        }
        if let Some(r) = reference {
            target.references.push(r);
        }
    }

    fn migrate(&self, _args: &Args<'_>, _ctx: &mut Context<'_>) -> Result<(), MigrationError> {
        Ok(())
    }
}

// ---------------------------------------------------------------------------

pub struct ClassToAssociation;

impl ClassToAssociation {
    /// `(owner class, reference name)` of every reference typed by `class`.
    fn incoming(mm: &Metamodel, class: &str) -> Vec<(String, Reference)> {
        mm.classes
            .iter()
            .flat_map(|c| c.references.iter().map(move |r| (c.name.clone(), r.clone())))
            .filter(|(_, r)| r.target == class)
            .collect()
    }
}

impl CoupledOperation for ClassToAssociation {
    fn signature(&self) -> OperationSignature {
        OperationSignature {
            name: "ClassToAssociation",
            parameters: vec![
                param("class", ParamKind::Element),
                param("sourceRef", ParamKind::String),
                param("targetRef", ParamKind::String),
                param("newRefName", ParamKind::String),
            ],
            description: "replace a link class by a many-valued reference from its source to its target",
        }
    }

    fn check(&self, args: &Args<'_>, mm: &Metamodel) -> Vec<ConstraintViolation> {
        let mut guard = Guard::new(args.operation);
        let qn = args.element("class");
        let (source_name, target_name) = (args.text("sourceRef"), args.text("targetRef"));
        let new_name = args.text("newRefName");
        let Some(class) = mm.class(qn.head()).filter(|_| qn.member().is_none()) else {
            guard.fail("class-exists", Some(&qn), "not a class");
            return guard.finish();
        };
        guard.require(
            mm.subclasses_of(&class.name).is_empty(),
            "no-subclasses",
            Some(&qn),
            "class has subclasses",
        );
        let features = mm.all_features(&class.name).unwrap_or_default();
        guard.require(
            features.len() == 2,
            "exactly-two-features",
            Some(&qn),
            format!("class has {} features", features.len()),
        );
        guard.require(source_name != target_name, "distinct-ends", Some(&qn), "source and target are the same feature");
        let mut ends = Vec::new();
        for name in [source_name, target_name] {
            let end = features.iter().find(|(_, f)| f.name() == name).and_then(|(_, f)| f.as_reference());
            let fq = QualifiedName::member_of(&class.name, name);
            match end {
                Some(r) => {
                    guard.require(
                        !r.upper.is_many() && !r.containment && r.opposite.is_none(),
                        "simple-end",
                        Some(&fq),
                        "end must be a single-valued, non-containment reference without opposite",
                    );
                    ends.push(r);
                }
                None => guard.fail("end-exists", Some(&fq), "no such reference"),
            }
        }

        let closure = mm.supertype_closure(&class.name);
        let mut containers = 0;
        for other in &mm.classes {
            for r in &other.references {
                if !closure.contains(&r.target) {
                    continue;
                }
                let fq = QualifiedName::member_of(&other.name, &r.name);
                if r.target == class.name && r.containment && r.opposite.is_none() && other.name != class.name {
                    containers += 1;
                } else {
                    guard.fail("no-other-references", Some(&fq), format!("reference can hold `{}` instances", class.name));
                }
            }
        }
        guard.require(containers == 1, "single-container", Some(&qn), format!("{containers} containment references hold the class"));

        guard.require(is_identifier(new_name), "identifier", None, format!("`{new_name}` is not an identifier"));
        if let Some(source) = ends.first() {
            guard.require(
                source.target != class.name
                    && !mm.feature_names_in_hierarchy(&source.target).contains(new_name),
                "name-free",
                None,
                format!("feature name `{new_name}` is already used in the hierarchy of `{}`", source.target),
            );
        }
        if let Some(target) = ends.get(1) {
            guard.require(target.target != class.name, "target-not-class", None, "target end points to the class itself");
        }
        guard.finish()
    }

    fn adapt(&self, args: &Args<'_>, mm: &mut Metamodel) {
        let class_name = args.element("class").head().to_owned();
        let class = mm.class(&class_name).expect("checked").clone();
        let end = |name: &str| class.references.iter().find(|r| r.name == name).cloned().expect("checked");
        let source = end(args.text("sourceRef"));
        let target = end(args.text("targetRef"));
        for (owner, r) in Self::incoming(mm, &class_name) {
            if let Some(c) = mm.class_mut(&owner) {
                c.references.retain(|x| x.name != r.name);
            }
        }
        mm.classes.retain(|c| c.name != class_name);
        mm.class_mut(&source.target).expect("checked").references.push(Reference::new(
            args.text("newRefName"),
            &target.target,
            false,
            0,
            Upper::Unbounded,
        ));
    }

    fn migrate(&self, args: &Args<'_>, ctx: &mut Context<'_>) -> Result<(), MigrationError> {
        let class_name = args.element("class").head().to_owned();
        let (source_name, target_name) = (args.text("sourceRef"), args.text("targetRef"));
        let new_name = args.text("newRefName");
        let before = ctx.before();
        let (owner, container) = Self::incoming(before, &class_name)
            .into_iter()
            .find(|(_, r)| r.containment)
            .expect("checked: one containment reference");

        let mut ordered = Vec::new();
        for holder in ctx.repo().all_instances(before, &owner, true)? {
            if let Some(value) = ctx.repo().slot(&holder, &container.name) {
                ordered.extend(value.refs().cloned());
            }
        }
        let mut rest: Vec<_> = ctx
            .repo()
            .all_instances(before, &class_name, false)?
            .into_iter()
            .filter(|id| !ordered.contains(id))
            .collect();
        ordered.retain(|id| ctx.repo().class_of(id).is_ok_and(|c| c == class_name));
        ordered.append(&mut rest);

        for link in ordered {
            let source = ctx.repo().slot(&link, source_name).and_then(Value::as_ref_id).cloned();
            let target = ctx.repo().slot(&link, target_name).and_then(Value::as_ref_id).cloned();
            match (source, target) {
                (Some(source), Some(target)) if ctx.repo().contains(&source) && ctx.repo().contains(&target) => {
                    ctx.write_slot(&source, new_name, SlotWrite::Add(Value::Ref(target)))?;
                }
                (source, _) => {
                    let missing = if source.is_none() { source_name } else { target_name };
                    ctx.warn(format!(
                        "{}: dropped {class_name} `{link}` with absent `{missing}`",
                        args.operation
                    ));
                }
            }
            ctx.delete_instance(&link)?;
        }
        for holder in ctx.repo().all_instances(before, &owner, true)? {
            ctx.repo_mut().put_slot_raw(&holder, &container.name, None)?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------

pub struct EnumerationToSubClasses;

impl CoupledOperation for EnumerationToSubClasses {
    fn signature(&self) -> OperationSignature {
        OperationSignature {
            name: "EnumerationToSubClasses",
            parameters: vec![param("attribute", ParamKind::Element)],
            description: "replace an enumeration attribute by one subclass per literal",
        }
    }

    fn check(&self, args: &Args<'_>, mm: &Metamodel) -> Vec<ConstraintViolation> {
        let mut guard = Guard::new(args.operation);
        let qn = args.element("attribute");
        let Some((class, feature)) = own_feature(&mut guard, mm, &qn) else {
            return guard.finish();
        };
        let Feature::Attribute(attribute) = feature else {
            guard.fail("is-attribute", Some(&qn), "not an attribute");
            return guard.finish();
        };
        let Some(enumeration) = mm.enumeration(&attribute.type_name) else {
            guard.fail("enumeration-typed", Some(&qn), format!("type `{}` is not an enumeration", attribute.type_name));
            return guard.finish();
        };
        guard.require(
            attribute.lower == 1 && attribute.upper == Upper::Bounded(1),
            "single-mandatory",
            Some(&qn),
            format!("bounds are {}..{}, expected 1..1", attribute.lower, attribute.upper),
        );
        guard.require(
            mm.subclasses_of(&class.name).is_empty(),
            "no-subclasses",
            Some(&QualifiedName::new(class.name.clone())),
            "declaring class already has subclasses",
        );
        for literal in &enumeration.literals {
            guard.require(
                !mm.type_name_in_use(literal),
                "literal-name-free",
                Some(&QualifiedName::member_of(&enumeration.name, literal)),
                format!("type name `{literal}` is already in use"),
            );
        }
        guard.finish()
    }

    fn adapt(&self, args: &Args<'_>, mm: &mut Metamodel) {
        let qn = args.element("attribute");
        let class_name = qn.head().to_owned();
        let attribute_name = qn.member().unwrap_or_default();
        let class = mm.class_mut(&class_name).expect("checked");
        let position = class.attributes.iter().position(|a| a.name == attribute_name).expect("checked");
        let attribute = class.attributes.remove(position);
        class.is_abstract = true;
        let literals = mm.enumeration(&attribute.type_name).expect("checked").literals.clone();
        let index = mm.class_index(&class_name).expect("checked");
        for (offset, literal) in literals.iter().enumerate() {
            mm.classes.insert(index + 1 + offset, Class::new(literal).with_super(&class_name));
        }
        let still_used = mm
            .classes
            .iter()
            .flat_map(|c| &c.attributes)
            .any(|a| a.type_name == attribute.type_name);
        if !still_used {
            mm.enumerations.retain(|e| e.name != attribute.type_name);
        }
    }

    fn migrate(&self, args: &Args<'_>, ctx: &mut Context<'_>) -> Result<(), MigrationError> {
        let qn = args.element("attribute");
        let attribute = qn.member().unwrap_or_default();
        let before = ctx.before();
        for id in ctx.repo().all_instances(before, qn.head(), false)? {
            let literal = ctx.repo().slot(&id, attribute).and_then(Value::as_str).map(str::to_owned);
            if let Some(literal) = literal {
                ctx.repo_mut().retype(&id, &literal)?;
                ctx.repo_mut().put_slot_raw(&id, attribute, None)?;
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------

pub struct SubClassesToEnumeration;

impl SubClassesToEnumeration {
    fn enumeration_name(super_class: &str) -> String {
        format!("{super_class}Kind")
    }
}

impl CoupledOperation for SubClassesToEnumeration {
    fn signature(&self) -> OperationSignature {
        OperationSignature {
            name: "SubClassesToEnumeration",
            parameters: vec![param("superClass", ParamKind::Element), param("attributeName", ParamKind::String)],
            description: "replace featureless leaf subclasses by an enumeration attribute on their super class",
        }
    }

    fn check(&self, args: &Args<'_>, mm: &Metamodel) -> Vec<ConstraintViolation> {
        let mut guard = Guard::new(args.operation);
        let qn = args.element("superClass");
        let attribute = args.text("attributeName");
        let Some(class) = mm.class(qn.head()).filter(|_| qn.member().is_none()) else {
            guard.fail("class-exists", Some(&qn), "not a class");
            return guard.finish();
        };
        guard.require(class.is_abstract, "abstract", Some(&qn), "super class is not abstract");
        let direct = mm.direct_subclasses_of(&class.name);
        guard.require(!direct.is_empty(), "has-subclasses", Some(&qn), "class has no subclasses");
        guard.require(
            mm.subclasses_of(&class.name).len() == direct.len(),
            "leaf-subclasses",
            Some(&qn),
            "subclasses have subclasses of their own",
        );
        for sub in &direct {
            let sq = QualifiedName::new(sub.name.clone());
            guard.require(sub.own_features().next().is_none(), "featureless", Some(&sq), "subclass declares features");
            guard.require(sub.super_types.len() == 1, "single-supertype", Some(&sq), "subclass has other super classes");
            guard.require(!sub.is_abstract, "concrete", Some(&sq), "subclass is abstract");
            let targeted = mm.classes.iter().flat_map(|c| &c.references).any(|r| r.target == sub.name);
            guard.require(!targeted, "not-referenced", Some(&sq), "a reference is typed by the subclass");
        }
        let enumeration = Self::enumeration_name(&class.name);
        guard.require(
            !mm.type_name_in_use(&enumeration),
            "enumeration-name-free",
            Some(&qn),
            format!("type name `{enumeration}` is already in use"),
        );
        guard.require(is_identifier(attribute), "identifier", None, format!("`{attribute}` is not an identifier"));
        guard.require(
            !mm.feature_names_in_hierarchy(&class.name).contains(attribute),
            "name-free",
            Some(&qn),
            format!("feature name `{attribute}` is already used in the hierarchy of `{}`", class.name),
        );
        guard.finish()
    }

    fn adapt(&self, args: &Args<'_>, mm: &mut Metamodel) {
        let class_name = args.element("superClass").head().to_owned();
        let subs: Vec<String> = mm.direct_subclasses_of(&class_name).iter().map(|c| c.name.clone()).collect();
        let enumeration = Self::enumeration_name(&class_name);
        mm.enumerations.push(Enumeration {
            name: enumeration.clone(),
            literals: subs.clone(),
        });
        mm.classes.retain(|c| !subs.contains(&c.name));
        let class = mm.class_mut(&class_name).expect("checked");
        class.is_abstract = false;
        class
            .attributes
            .push(Attribute::new(args.text("attributeName"), &enumeration, 1, Upper::Bounded(1)));
    }

    fn migrate(&self, args: &Args<'_>, ctx: &mut Context<'_>) -> Result<(), MigrationError> {
        let class_name = args.element("superClass").head().to_owned();
        let attribute = args.text("attributeName");
        let before = ctx.before();
        for sub in before.direct_subclasses_of(&class_name) {
            for id in ctx.repo().all_instances(before, &sub.name, false)? {
                ctx.repo_mut().retype(&id, &class_name)?;
                ctx.repo_mut().put_slot_raw(&id, attribute, Some(Value::str(sub.name.clone())))?;
            }
        }
        Ok(())
    }
}
