//! Explicit history model.
//!
//! A [`History`] stores a baseline metamodel snapshot followed by releases of
//! recorded changes. Replaying the changes of releases `0..=k` over the
//! baseline yields the metamodel of release `k`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metamodel::{
    is_identifier, Attribute, Class, Element, Enumeration, Metamodel, MetamodelViolation,
    QualifiedName, Reference, Upper,
};
use crate::operations::{self, Arguments, ConstraintViolation, OperationError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PrimitiveKind {
    CreateClass,
    DeleteClass,
    CreateAttribute,
    CreateReference,
    DeleteFeature,
    Rename,
    SetProperty,
    AddSuper,
    RemoveSuper,
    CreateEnum,
    DeleteEnum,
}

/// Scalar argument of a primitive change.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Bool(bool),
    Int(i64),
    Str(String),
}

impl From<&str> for Scalar {
    fn from(s: &str) -> Self {
        Scalar::Str(s.to_owned())
    }
}

impl From<i64> for Scalar {
    fn from(i: i64) -> Self {
        Scalar::Int(i)
    }
}

impl From<bool> for Scalar {
    fn from(b: bool) -> Self {
        Scalar::Bool(b)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimitiveChange {
    pub kind: PrimitiveKind,
    pub target: QualifiedName,
    #[serde(default)]
    pub arguments: BTreeMap<String, Scalar>,
}

impl PrimitiveChange {
    pub fn new(kind: PrimitiveKind, target: &str) -> Self {
        PrimitiveChange {
            kind,
            target: QualifiedName::new(target),
            arguments: BTreeMap::new(),
        }
    }

    pub fn arg(mut self, name: &str, value: impl Into<Scalar>) -> Self {
        self.arguments.insert(name.to_owned(), value.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperationApplication {
    pub operation: String,
    pub arguments: Arguments,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompositeChange {
    pub children: Vec<PrimitiveChange>,
    pub migration: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Change {
    Primitive(PrimitiveChange),
    Operation(OperationApplication),
    Composite(CompositeChange),
}

impl Change {
    pub fn operation(name: &str, arguments: Arguments) -> Self {
        Change::Operation(OperationApplication {
            operation: name.to_owned(),
            arguments,
        })
    }

    /// An empty metamodel adaptation carrying a custom migration.
    pub fn custom_migration(name: &str) -> Self {
        Change::Composite(CompositeChange {
            children: Vec::new(),
            migration: Some(name.to_owned()),
        })
    }
}

impl fmt::Display for Change {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Change::Primitive(p) => write!(f, "{:?} {}", p.kind, p.target),
            Change::Operation(op) => {
                write!(f, "{}(", op.operation)?;
                for (i, (k, v)) in op.arguments.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    match v {
                        operations::Argument::Text(t) => write!(f, "{k}={t}")?,
                        operations::Argument::List(l) => write!(f, "{k}=[{}]", l.join(","))?,
                        operations::Argument::Flag(b) => write!(f, "{k}={b}")?,
                    }
                }
                f.write_str(")")
            }
            Change::Composite(c) => write!(
                f,
                "composite({} change(s)) migration={}",
                c.children.len(),
                c.migration.as_deref().unwrap_or("-")
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Release {
    pub released: bool,
    pub changes: Vec<Change>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChangeError {
    #[error("{0}")]
    Primitive(String),
    #[error(transparent)]
    Operation(#[from] OperationError),
}

impl ChangeError {
    /// Constraint violations behind this error, if it came from an operation
    /// guard.
    pub fn violations(&self) -> &[ConstraintViolation] {
        match self {
            ChangeError::Operation(OperationError::Violations(v)) => v,
            _ => &[],
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HistoryError {
    #[error("invalid metamodel: {}", join(.0))]
    InvalidMetamodel(Vec<MetamodelViolation>),
    #[error("release {0} is closed")]
    ClosedRelease(usize),
    #[error("change is not applicable: {0}")]
    InapplicableChange(ChangeError),
    #[error("release {0} is closed; cannot attach a migration")]
    SpanClosed(usize),
    #[error("span {start}+{length} does not address consecutive primitive changes of release {release}")]
    SpanNonContiguous { release: usize, start: usize, length: usize },
    #[error("release {index} does not exist (last is {last})")]
    NoSuchRelease { index: usize, last: usize },
    #[error("corrupt history: change {change} of release {release} fails: {error}")]
    Corrupt { release: usize, change: usize, error: ChangeError },
}

fn join(violations: &[MetamodelViolation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub metamodel: String,
    pub baseline: Metamodel,
    pub releases: Vec<Release>,
}

impl History {
    /// Starts a history for an existing metamodel with one open, empty
    /// release.
    pub fn create(mm: &Metamodel) -> Result<History, HistoryError> {
        let violations = mm.validate();
        if !violations.is_empty() {
            return Err(HistoryError::InvalidMetamodel(violations));
        }
        Ok(History {
            metamodel: mm.name.clone(),
            baseline: mm.clone(),
            releases: vec![Release {
                released: false,
                changes: Vec::new(),
            }],
        })
    }

    pub fn last_index(&self) -> usize {
        self.releases.len().saturating_sub(1)
    }

    /// Index of the newest closed release.
    pub fn last_released(&self) -> Option<usize> {
        self.releases.iter().rposition(|r| r.released)
    }

    fn head_open(&self) -> Result<usize, HistoryError> {
        let last = self.last_index();
        match self.releases.last() {
            Some(release) if !release.released => Ok(last),
            _ => Err(HistoryError::ClosedRelease(last)),
        }
    }

    /// Metamodel after every recorded change.
    pub fn head_metamodel(&self) -> Result<Metamodel, HistoryError> {
        self.reconstruct(self.last_index())
    }

    /// Replays releases `0..=index` over the baseline.
    pub fn reconstruct(&self, index: usize) -> Result<Metamodel, HistoryError> {
        if index >= self.releases.len() {
            return Err(HistoryError::NoSuchRelease {
                index,
                last: self.last_index(),
            });
        }
        let mut mm = self.baseline.clone();
        for (r, release) in self.releases[..=index].iter().enumerate() {
            for (c, change) in release.changes.iter().enumerate() {
                apply_change(&mut mm, change).map_err(|error| HistoryError::Corrupt {
                    release: r,
                    change: c,
                    error,
                })?;
            }
        }
        Ok(mm)
    }

    /// Appends a change to the open head release after checking that it
    /// applies to the head metamodel.
    pub fn record(&mut self, change: Change) -> Result<(), HistoryError> {
        let head = self.head_open()?;
        let mut mm = self.head_metamodel()?;
        apply_change(&mut mm, &change).map_err(HistoryError::InapplicableChange)?;
        self.releases[head].changes.push(change);
        Ok(())
    }

    /// Wraps `length` consecutive primitive changes starting at `start` into
    /// a composite change carrying `migration`. A zero length inserts an
    /// empty adaptation at `start`.
    pub fn attach_migration(
        &mut self,
        release: usize,
        start: usize,
        length: usize,
        migration: &str,
    ) -> Result<(), HistoryError> {
        let last = self.last_index();
        let target = self
            .releases
            .get_mut(release)
            .ok_or(HistoryError::NoSuchRelease { index: release, last })?;
        if target.released {
            return Err(HistoryError::SpanClosed(release));
        }
        let non_contiguous = HistoryError::SpanNonContiguous { release, start, length };
        let end = start.checked_add(length).ok_or(non_contiguous.clone())?;
        if end > target.changes.len() {
            return Err(non_contiguous);
        }
        let mut children = Vec::with_capacity(length);
        for change in &target.changes[start..end] {
            match change {
                Change::Primitive(p) => children.push(p.clone()),
                _ => return Err(non_contiguous),
            }
        }
        target.changes.splice(
            start..end,
            [Change::Composite(CompositeChange {
                children,
                migration: Some(migration.to_owned()),
            })],
        );
        Ok(())
    }

    /// Closes the head release and opens a new one. Refused if the head
    /// metamodel is invalid.
    pub fn release_head(&mut self) -> Result<usize, HistoryError> {
        let head = self.head_open()?;
        let violations = self.head_metamodel()?.validate();
        if !violations.is_empty() {
            return Err(HistoryError::InvalidMetamodel(violations));
        }
        self.releases[head].released = true;
        self.releases.push(Release {
            released: false,
            changes: Vec::new(),
        });
        Ok(head)
    }
}

/// Applies the metamodel adaptation of one change.
pub fn apply_change(mm: &mut Metamodel, change: &Change) -> Result<(), ChangeError> {
    match change {
        Change::Primitive(p) => apply_primitive(mm, p),
        Change::Operation(op) => Ok(operations::adapt(&op.operation, &op.arguments, mm)?),
        Change::Composite(c) => c.children.iter().try_for_each(|p| apply_primitive(mm, p)),
    }
}

fn fail<T>(message: impl Into<String>) -> Result<T, ChangeError> {
    Err(ChangeError::Primitive(message.into()))
}

fn str_arg<'a>(p: &'a PrimitiveChange, name: &str) -> Result<&'a str, ChangeError> {
    match p.arguments.get(name) {
        Some(Scalar::Str(s)) => Ok(s),
        _ => fail(format!("{:?} {}: missing string argument `{name}`", p.kind, p.target)),
    }
}

fn opt_str_arg<'a>(p: &'a PrimitiveChange, name: &str) -> Result<Option<&'a str>, ChangeError> {
    match p.arguments.get(name) {
        None => Ok(None),
        Some(Scalar::Str(s)) => Ok(Some(s)),
        Some(_) => fail(format!("{:?} {}: argument `{name}` must be a string", p.kind, p.target)),
    }
}

fn int_arg(p: &PrimitiveChange, name: &str, default: i64) -> Result<i64, ChangeError> {
    match p.arguments.get(name) {
        None => Ok(default),
        Some(Scalar::Int(i)) => Ok(*i),
        Some(_) => fail(format!("{:?} {}: argument `{name}` must be an integer", p.kind, p.target)),
    }
}

fn bool_arg(p: &PrimitiveChange, name: &str) -> Result<bool, ChangeError> {
    match p.arguments.get(name) {
        None => Ok(false),
        Some(Scalar::Bool(b)) => Ok(*b),
        Some(_) => fail(format!("{:?} {}: argument `{name}` must be a boolean", p.kind, p.target)),
    }
}

fn lower_of(raw: i64) -> Result<u32, ChangeError> {
    u32::try_from(raw).or_else(|_| fail(format!("invalid lower bound {raw}")))
}

fn upper_of(raw: i64) -> Result<Upper, ChangeError> {
    match raw {
        -1 => Ok(Upper::Unbounded),
        n => u32::try_from(n)
            .map(Upper::Bounded)
            .or_else(|_| fail(format!("invalid upper bound {n}"))),
    }
}

fn class_target<'a>(mm: &'a mut Metamodel, p: &PrimitiveChange) -> Result<&'a mut Class, ChangeError> {
    if p.target.member().is_some() {
        return fail(format!("{:?}: `{}` must name a class", p.kind, p.target));
    }
    match mm.class_mut(p.target.head()) {
        Some(class) => Ok(class),
        None => fail(format!("{:?}: no class `{}`", p.kind, p.target)),
    }
}

/// Applies a primitive metamodel change. Only local applicability is
/// checked; the result may be invalid until later changes complete it.
pub fn apply_primitive(mm: &mut Metamodel, p: &PrimitiveChange) -> Result<(), ChangeError> {
    let head = p.target.head();
    match p.kind {
        PrimitiveKind::CreateClass => {
            if p.target.member().is_some() || !is_identifier(head) || mm.type_name_in_use(head) {
                return fail(format!("cannot create class `{}`", p.target));
            }
            mm.classes.push(Class::new(head).with_abstract(bool_arg(p, "abstract")?));
        }
        PrimitiveKind::DeleteClass => {
            class_target(mm, p)?;
            mm.classes.retain(|c| c.name != head);
        }
        PrimitiveKind::CreateAttribute | PrimitiveKind::CreateReference => {
            let Some(name) = p.target.member() else {
                return fail(format!("{:?}: `{}` must name a feature", p.kind, p.target));
            };
            if !is_identifier(name) {
                return fail(format!("`{name}` is not an identifier"));
            }
            if mm.class(head).is_none() {
                return fail(format!("no class `{head}`"));
            }
            if mm.feature_names_in_hierarchy(head).contains(name) {
                return fail(format!("feature name `{name}` already used in the hierarchy of `{head}`"));
            }
            let lower = lower_of(int_arg(p, "lower", 0)?)?;
            let upper = upper_of(int_arg(p, "upper", 1)?)?;
            let class = mm.class_mut(head).expect("checked");
            if p.kind == PrimitiveKind::CreateAttribute {
                class.attributes.push(Attribute::new(name, str_arg(p, "type")?, lower, upper));
            } else {
                class.references.push(Reference {
                    opposite: opt_str_arg(p, "opposite")?.map(str::to_owned),
                    ..Reference::new(name, str_arg(p, "target")?, bool_arg(p, "containment")?, lower, upper)
                });
            }
        }
        PrimitiveKind::DeleteFeature => {
            let name = p.target.member().unwrap_or_default();
            let removed = mm.class_mut(head).is_some_and(|c| c.remove_feature(name));
            if !removed {
                return fail(format!("no feature `{}` declared on `{head}`", p.target));
            }
        }
        PrimitiveKind::Rename => {
            let new_name = str_arg(p, "newName")?;
            let violations = operations::check_rename(mm, &p.target, new_name);
            if !violations.is_empty() {
                return Err(OperationError::Violations(violations).into());
            }
            operations::rename_in_metamodel(mm, &p.target, new_name);
        }
        PrimitiveKind::SetProperty => set_property(mm, p)?,
        PrimitiveKind::AddSuper => {
            let sup = str_arg(p, "super")?.to_owned();
            if mm.class(&sup).is_none() {
                return fail(format!("no class `{sup}`"));
            }
            let class = class_target(mm, p)?;
            if class.super_types.contains(&sup) {
                return fail(format!("`{head}` already extends `{sup}`"));
            }
            class.super_types.push(sup);
        }
        PrimitiveKind::RemoveSuper => {
            let sup = str_arg(p, "super")?.to_owned();
            let class = class_target(mm, p)?;
            if !class.super_types.contains(&sup) {
                return fail(format!("`{head}` does not extend `{sup}`"));
            }
            class.super_types.retain(|s| *s != sup);
        }
        PrimitiveKind::CreateEnum => {
            if p.target.member().is_some() || !is_identifier(head) || mm.type_name_in_use(head) {
                return fail(format!("cannot create enumeration `{}`", p.target));
            }
            let literals: Vec<&str> = str_arg(p, "literals")?
                .split(',')
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .collect();
            mm.enumerations.push(Enumeration::new(head, &literals));
        }
        PrimitiveKind::DeleteEnum => {
            if mm.enumeration(head).is_none() {
                return fail(format!("no enumeration `{head}`"));
            }
            mm.enumerations.retain(|e| e.name != head);
        }
    }
    Ok(())
}

fn set_property(mm: &mut Metamodel, p: &PrimitiveChange) -> Result<(), ChangeError> {
    let property = str_arg(p, "property")?;
    let value = p
        .arguments
        .get("value")
        .ok_or_else(|| ChangeError::Primitive("SET_PROPERTY needs a `value`".into()))?;
    let wrong = || fail(format!("cannot set `{property}` of `{}` to {value:?}", p.target));
    let element = match mm.resolve(&p.target) {
        Ok(Element::Class(_)) => 'c',
        Ok(Element::Attribute(_)) => 'a',
        Ok(Element::Reference(_)) => 'r',
        _ => return fail(format!("SET_PROPERTY: no class or feature `{}`", p.target)),
    };
    let owner = match element {
        'c' => p.target.head().to_owned(),
        _ => mm.resolve_feature(&p.target).expect("resolved").0.name.clone(),
    };
    let member = p.target.member().unwrap_or_default().to_owned();
    let class = mm.class_mut(&owner).expect("resolved");
    match (element, property, value) {
        ('c', "abstract", Scalar::Bool(b)) => class.is_abstract = *b,
        ('a', _, _) => {
            let a = class.attributes.iter_mut().find(|a| a.name == member).expect("resolved");
            match (property, value) {
                ("type", Scalar::Str(s)) => a.type_name = s.clone(),
                ("lower", Scalar::Int(i)) => a.lower = lower_of(*i)?,
                ("upper", Scalar::Int(i)) => a.upper = upper_of(*i)?,
                _ => return wrong(),
            }
        }
        ('r', _, _) => {
            let r = class.references.iter_mut().find(|r| r.name == member).expect("resolved");
            match (property, value) {
                ("target", Scalar::Str(s)) => r.target = s.clone(),
                ("containment", Scalar::Bool(b)) => r.containment = *b,
                ("lower", Scalar::Int(i)) => r.lower = lower_of(*i)?,
                ("upper", Scalar::Int(i)) => r.upper = upper_of(*i)?,
                ("opposite", Scalar::Str(s)) => r.opposite = (!s.is_empty()).then(|| s.clone()),
                _ => return wrong(),
            }
        }
        _ => return wrong(),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::helloworld::fixtures;
    use crate::operations::{arguments, Argument};

    #[test]
    fn create_history_starts_open() {
        let mm = fixtures::graph1();
        let mut h = History::create(&mm).unwrap();
        assert_eq!(h.reconstruct(0).unwrap(), mm);
        assert_eq!(h.release_head().unwrap(), 0);
        assert!(h.releases[0].released);
        assert!(!h.releases[1].released);
    }

    #[test]
    fn create_history_rejects_invalid() {
        let mut mm = fixtures::graph1();
        mm.class_mut("Edge").unwrap().references[0].target = "Nodee".into();
        assert!(matches!(History::create(&mm), Err(HistoryError::InvalidMetamodel(_))));
    }

    #[test]
    fn record_rename_primitive() {
        let mut h = History::create(&fixtures::graph1()).unwrap();
        h.record(Change::Primitive(
            PrimitiveChange::new(PrimitiveKind::Rename, "Node.name").arg("newName", "text"),
        ))
        .unwrap();
        let head = h.head_metamodel().unwrap();
        assert!(head.resolve(&"Node.text".into()).is_ok());
        let err = h
            .record(Change::Primitive(
                PrimitiveChange::new(PrimitiveKind::Rename, "Node.nope").arg("newName", "x"),
            ))
            .unwrap_err();
        assert!(matches!(err, HistoryError::InapplicableChange(_)));
        assert_eq!(h.releases[0].changes.len(), 1);
    }

    #[test]
    fn record_operation_extracts_super_class() {
        let mut h = History::create(&fixtures::graph1()).unwrap();
        h.record(Change::operation(
            "ExtractSuperClass",
            arguments([
                ("subClasses", Argument::from(&["Node", "Edge"][..])),
                ("superName", "GraphComponent".into()),
            ]),
        ))
        .unwrap();
        let head = h.head_metamodel().unwrap();
        assert!(head.class("GraphComponent").unwrap().is_abstract);
    }

    #[test]
    fn closed_release_rejects_changes() {
        let mut h = History::create(&fixtures::graph1()).unwrap();
        h.releases[0].released = true;
        let err = h.record(Change::custom_migration("X")).unwrap_err();
        assert_eq!(err, HistoryError::ClosedRelease(0));
    }

    #[test]
    fn attach_migration_spans() {
        let mut h = History::create(&fixtures::graph1()).unwrap();
        h.release_head().unwrap();
        h.attach_migration(1, 0, 0, "CountNodes").unwrap();
        assert_eq!(h.releases[1].changes, vec![Change::custom_migration("CountNodes")]);
        // wrapped span cannot be wrapped again
        assert!(matches!(
            h.attach_migration(1, 0, 1, "Again"),
            Err(HistoryError::SpanNonContiguous { .. })
        ));
        // beyond the release's end
        assert!(matches!(
            h.attach_migration(1, 1, 2, "Far"),
            Err(HistoryError::SpanNonContiguous { .. })
        ));
        assert_eq!(h.attach_migration(0, 0, 0, "Closed"), Err(HistoryError::SpanClosed(0)));

        let mut h = History::create(&fixtures::graph1()).unwrap();
        h.record(Change::Primitive(PrimitiveChange::new(PrimitiveKind::CreateClass, "Label"))).unwrap();
        h.record(Change::Primitive(
            PrimitiveChange::new(PrimitiveKind::CreateAttribute, "Label.text").arg("type", "String"),
        ))
        .unwrap();
        h.attach_migration(0, 0, 2, "FillLabels").unwrap();
        match &h.releases[0].changes[..] {
            [Change::Composite(c)] => assert_eq!(c.children.len(), 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(h.head_metamodel().unwrap().class("Label").is_some());
    }

    #[test]
    fn release_refuses_invalid_head() {
        let mut h = History::create(&fixtures::graph1()).unwrap();
        h.record(Change::Primitive(
            PrimitiveChange::new(PrimitiveKind::CreateReference, "Node.next").arg("target", "Later"),
        ))
        .unwrap();
        assert!(matches!(h.release_head(), Err(HistoryError::InvalidMetamodel(_))));
        h.record(Change::Primitive(PrimitiveChange::new(PrimitiveKind::CreateClass, "Later"))).unwrap();
        assert_eq!(h.release_head(), Ok(0));
    }

    #[test]
    fn prefix_stability() {
        let mut h = History::create(&fixtures::graph1()).unwrap();
        h.record(Change::Primitive(PrimitiveChange::new(PrimitiveKind::CreateClass, "A"))).unwrap();
        h.release_head().unwrap();
        let at0 = h.reconstruct(0).unwrap();
        h.record(Change::Primitive(PrimitiveChange::new(PrimitiveKind::CreateClass, "B"))).unwrap();
        h.release_head().unwrap();
        assert_eq!(h.reconstruct(0).unwrap(), at0);
        assert!(h.reconstruct(1).unwrap().class("B").is_some());
        assert!(matches!(h.reconstruct(9), Err(HistoryError::NoSuchRelease { .. })));
    }

    #[test]
    fn primitive_kinds_apply() {
        let mut mm = fixtures::graph1();
        let steps = [
            PrimitiveChange::new(PrimitiveKind::CreateEnum, "Color").arg("literals", "RED, GREEN"),
            PrimitiveChange::new(PrimitiveKind::CreateAttribute, "Node.color")
                .arg("type", "Color")
                .arg("lower", 0)
                .arg("upper", 1),
            PrimitiveChange::new(PrimitiveKind::SetProperty, "Node.color").arg("property", "upper").arg("value", -1),
            PrimitiveChange::new(PrimitiveKind::CreateClass, "Base").arg("abstract", true),
            PrimitiveChange::new(PrimitiveKind::AddSuper, "Node").arg("super", "Base"),
            PrimitiveChange::new(PrimitiveKind::RemoveSuper, "Node").arg("super", "Base"),
            PrimitiveChange::new(PrimitiveKind::DeleteClass, "Base"),
            PrimitiveChange::new(PrimitiveKind::DeleteFeature, "Node.color"),
            PrimitiveChange::new(PrimitiveKind::DeleteEnum, "Color"),
        ];
        for step in &steps {
            apply_primitive(&mut mm, step).unwrap_or_else(|e| panic!("{step:?}: {e}"));
        }
        assert_eq!(mm, fixtures::graph1());
        assert!(apply_primitive(&mut mm, &PrimitiveChange::new(PrimitiveKind::DeleteFeature, "Node.nope")).is_err());
        assert!(apply_primitive(&mut mm, &PrimitiveChange::new(PrimitiveKind::CreateClass, "Node")).is_err());
    }

    #[test]
    fn change_json_shapes() {
        let change = Change::custom_migration("CountNodes");
        let json = serde_json::to_string(&change).unwrap();
        assert_eq!(json, r#"{"type":"composite","children":[],"migration":"CountNodes"}"#);
        let op = Change::operation("Rename", arguments([("element", "Node.name".into()), ("newName", "text".into())]));
        let json = serde_json::to_string(&op).unwrap();
        assert_eq!(
            json,
            r#"{"type":"operation","operation":"Rename","arguments":{"element":"Node.name","newName":"text"}}"#
        );
        assert_eq!(serde_json::from_str::<Change>(&json).unwrap(), op);
    }
}
