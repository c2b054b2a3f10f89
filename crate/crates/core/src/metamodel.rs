//! Structural metamodeling kernel.
//!
//! A [`Metamodel`] is a single flat namespace of classes and enumerations.
//! Classes carry attributes (typed by a primitive or an enumeration) and
//! references (typed by a class). Inheritance may be multiple but must be
//! acyclic, and feature names must be unique across a class and everything it
//! inherits.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Names of the built-in primitive types.
pub const PRIMITIVE_TYPES: [&str; 4] = ["String", "Int", "Bool", "Float"];

pub fn is_primitive(name: &str) -> bool {
    PRIMITIVE_TYPES.contains(&name)
}

/// `true` if `name` is a usable identifier: ASCII letter or `_` first, then
/// letters, digits or `_`.
pub fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetamodelError {
    #[error("`{qualified}` not found: no element named `{segment}`")]
    NotFound { qualified: String, segment: String },
}

/// Upper multiplicity bound. Serialized as an integer, with `-1` for
/// [`Upper::Unbounded`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Upper {
    Bounded(u32),
    Unbounded,
}

impl Upper {
    pub fn is_many(self) -> bool {
        !matches!(self, Upper::Bounded(0) | Upper::Bounded(1))
    }

    pub fn admits(self, count: usize) -> bool {
        match self {
            Upper::Bounded(n) => count <= n as usize,
            Upper::Unbounded => true,
        }
    }

    pub fn as_i64(self) -> i64 {
        match self {
            Upper::Bounded(n) => i64::from(n),
            Upper::Unbounded => -1,
        }
    }
}

impl fmt::Display for Upper {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Upper::Bounded(n) => write!(f, "{n}"),
            Upper::Unbounded => f.write_str("*"),
        }
    }
}

impl Serialize for Upper {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_i64(self.as_i64())
    }
}

impl<'de> Deserialize<'de> for Upper {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = i64::deserialize(deserializer)?;
        match raw {
            -1 => Ok(Upper::Unbounded),
            n if (0..=i64::from(u32::MAX)).contains(&n) => Ok(Upper::Bounded(n as u32)),
            n => Err(serde::de::Error::custom(format!("invalid upper bound {n}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    #[serde(rename = "type")]
    pub type_name: String,
    pub lower: u32,
    pub upper: Upper,
}

impl Attribute {
    pub fn new(name: &str, type_name: &str, lower: u32, upper: Upper) -> Self {
        Attribute {
            name: name.to_owned(),
            type_name: type_name.to_owned(),
            lower,
            upper,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reference {
    pub name: String,
    pub target: String,
    pub containment: bool,
    pub lower: u32,
    pub upper: Upper,
    pub opposite: Option<String>,
}

impl Reference {
    pub fn new(name: &str, target: &str, containment: bool, lower: u32, upper: Upper) -> Self {
        Reference {
            name: name.to_owned(),
            target: target.to_owned(),
            containment,
            lower,
            upper,
            opposite: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Class {
    pub name: String,
    #[serde(rename = "abstract")]
    pub is_abstract: bool,
    #[serde(rename = "superTypes")]
    pub super_types: Vec<String>,
    pub attributes: Vec<Attribute>,
    pub references: Vec<Reference>,
}

impl Class {
    pub fn new(name: &str) -> Self {
        Class {
            name: name.to_owned(),
            is_abstract: false,
            super_types: Vec::new(),
            attributes: Vec::new(),
            references: Vec::new(),
        }
    }

    pub fn with_abstract(mut self, is_abstract: bool) -> Self {
        self.is_abstract = is_abstract;
        self
    }

    pub fn with_super(mut self, super_type: &str) -> Self {
        self.super_types.push(super_type.to_owned());
        self
    }

    pub fn with_attribute(mut self, attribute: Attribute) -> Self {
        self.attributes.push(attribute);
        self
    }

    pub fn with_reference(mut self, reference: Reference) -> Self {
        self.references.push(reference);
        self
    }

    /// Own (non-inherited) feature by name.
    pub fn own_feature(&self, name: &str) -> Option<Feature<'_>> {
        self.attributes
            .iter()
            .find(|a| a.name == name)
            .map(Feature::Attribute)
            .or_else(|| {
                self.references
                    .iter()
                    .find(|r| r.name == name)
                    .map(Feature::Reference)
            })
    }

    pub fn own_features(&self) -> impl Iterator<Item = Feature<'_>> {
        self.attributes
            .iter()
            .map(Feature::Attribute)
            .chain(self.references.iter().map(Feature::Reference))
    }

    /// Removes an own feature, returning whether one was removed.
    pub fn remove_feature(&mut self, name: &str) -> bool {
        let before = self.attributes.len() + self.references.len();
        self.attributes.retain(|a| a.name != name);
        self.references.retain(|r| r.name != name);
        before != self.attributes.len() + self.references.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Enumeration {
    pub name: String,
    pub literals: Vec<String>,
}

impl Enumeration {
    pub fn new(name: &str, literals: &[&str]) -> Self {
        Enumeration {
            name: name.to_owned(),
            literals: literals.iter().map(|l| (*l).to_owned()).collect(),
        }
    }
}

/// A borrowed attribute or reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feature<'a> {
    Attribute(&'a Attribute),
    Reference(&'a Reference),
}

impl<'a> Feature<'a> {
    pub fn name(&self) -> &'a str {
        match self {
            Feature::Attribute(a) => &a.name,
            Feature::Reference(r) => &r.name,
        }
    }

    pub fn lower(&self) -> u32 {
        match self {
            Feature::Attribute(a) => a.lower,
            Feature::Reference(r) => r.lower,
        }
    }

    pub fn upper(&self) -> Upper {
        match self {
            Feature::Attribute(a) => a.upper,
            Feature::Reference(r) => r.upper,
        }
    }

    pub fn as_reference(&self) -> Option<&'a Reference> {
        match self {
            Feature::Reference(r) => Some(r),
            Feature::Attribute(_) => None,
        }
    }
}

/// A resolved metamodel element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Element<'a> {
    Class(&'a Class),
    Attribute(&'a Attribute),
    Reference(&'a Reference),
    Enumeration(&'a Enumeration),
}

/// Dotted path naming a class or enumeration (`Node`) or a member of one
/// (`Edge.src`, `Kind.CIRCLE`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QualifiedName(String);

impl QualifiedName {
    pub fn new(path: impl Into<String>) -> Self {
        QualifiedName(path.into())
    }

    pub fn member_of(owner: &str, member: &str) -> Self {
        QualifiedName(format!("{owner}.{member}"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The class or enumeration segment.
    pub fn head(&self) -> &str {
        self.0.split_once('.').map_or(&self.0, |(head, _)| head)
    }

    /// The feature or literal segment, if any.
    pub fn member(&self) -> Option<&str> {
        self.0.split_once('.').map(|(_, member)| member)
    }

    fn not_found(&self, segment: &str) -> MetamodelError {
        MetamodelError::NotFound {
            qualified: self.0.clone(),
            segment: segment.to_owned(),
        }
    }
}

impl fmt::Display for QualifiedName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for QualifiedName {
    fn from(path: &str) -> Self {
        QualifiedName::new(path)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MetamodelViolationKind {
    DuplicateName,
    InvalidName,
    InheritanceCycle,
    UnresolvedSuperType,
    UnresolvedType,
    UnresolvedTarget,
    FeatureClash,
    InvalidBounds,
    InvalidOpposite,
    InvalidEnumeration,
}

/// A broken metamodel invariant, located by qualified name.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct MetamodelViolation {
    pub at: QualifiedName,
    pub kind: MetamodelViolationKind,
    pub message: String,
}

impl fmt::Display for MetamodelViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} {}: {}", self.kind, self.at, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metamodel {
    pub name: String,
    pub classes: Vec<Class>,
    pub enumerations: Vec<Enumeration>,
}

impl Metamodel {
    pub fn new(name: &str) -> Self {
        Metamodel {
            name: name.to_owned(),
            classes: Vec::new(),
            enumerations: Vec::new(),
        }
    }

    pub fn with_class(mut self, class: Class) -> Self {
        self.classes.push(class);
        self
    }

    pub fn with_enumeration(mut self, enumeration: Enumeration) -> Self {
        self.enumerations.push(enumeration);
        self
    }

    pub fn class(&self, name: &str) -> Option<&Class> {
        self.classes.iter().find(|c| c.name == name)
    }

    pub fn class_mut(&mut self, name: &str) -> Option<&mut Class> {
        self.classes.iter_mut().find(|c| c.name == name)
    }

    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.classes.iter().position(|c| c.name == name)
    }

    pub fn enumeration(&self, name: &str) -> Option<&Enumeration> {
        self.enumerations.iter().find(|e| e.name == name)
    }

    pub fn enumeration_mut(&mut self, name: &str) -> Option<&mut Enumeration> {
        self.enumerations.iter_mut().find(|e| e.name == name)
    }

    /// `true` if `name` is taken by a class, enumeration or primitive type.
    pub fn type_name_in_use(&self, name: &str) -> bool {
        is_primitive(name) || self.class(name).is_some() || self.enumeration(name).is_some()
    }

    pub fn require_class(&self, name: &str) -> Result<&Class, MetamodelError> {
        self.class(name).ok_or_else(|| MetamodelError::NotFound {
            qualified: name.to_owned(),
            segment: name.to_owned(),
        })
    }

    /// Resolves a qualified name; features are looked up including inherited
    /// ones.
    pub fn resolve(&self, qn: &QualifiedName) -> Result<Element<'_>, MetamodelError> {
        let head = qn.head();
        match qn.member() {
            None => self
                .class(head)
                .map(Element::Class)
                .or_else(|| self.enumeration(head).map(Element::Enumeration))
                .ok_or_else(|| qn.not_found(head)),
            Some(member) => {
                let class = self.class(head).ok_or_else(|| qn.not_found(head))?;
                match self.find_feature(&class.name, member) {
                    Some((_, Feature::Attribute(a))) => Ok(Element::Attribute(a)),
                    Some((_, Feature::Reference(r))) => Ok(Element::Reference(r)),
                    None => Err(qn.not_found(member)),
                }
            }
        }
    }

    /// Resolves `Class.feature` to its owning class and the feature, with
    /// inherited features found on supertypes.
    pub fn resolve_feature(
        &self,
        qn: &QualifiedName,
    ) -> Result<(&Class, Feature<'_>), MetamodelError> {
        let head = qn.head();
        self.class(head).ok_or_else(|| qn.not_found(head))?;
        let member = qn.member().ok_or_else(|| qn.not_found(""))?;
        let (owner, feature) = self
            .find_feature(head, member)
            .ok_or_else(|| qn.not_found(member))?;
        Ok((self.class(owner).expect("owner is declared"), feature))
    }

    /// The feature `name` visible on `class` (own or inherited) and its owner.
    pub fn find_feature(&self, class: &str, name: &str) -> Option<(&str, Feature<'_>)> {
        self.linearization(class)
            .into_iter()
            .filter_map(|c| self.class(c))
            .find_map(|c| c.own_feature(name).map(|f| (c.name.as_str(), f)))
    }

    /// Reflexive-transitive closure of `super_types`.
    pub fn is_subtype_of(&self, sub: &str, sup: &str) -> Result<bool, MetamodelError> {
        self.require_class(sub)?;
        self.require_class(sup)?;
        Ok(self.supertype_closure(sub).contains(sup))
    }

    /// All classes `sub` is a subtype of, including itself. Unknown supertypes
    /// and cycles are tolerated.
    pub fn supertype_closure(&self, class: &str) -> BTreeSet<String> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![class.to_owned()];
        while let Some(name) = stack.pop() {
            if !seen.insert(name.clone()) {
                continue;
            }
            if let Some(c) = self.class(&name) {
                stack.extend(c.super_types.iter().cloned());
            }
        }
        seen
    }

    /// Classes that have `class` in their supertype closure, excluding `class`
    /// itself, in declaration order.
    pub fn subclasses_of(&self, class: &str) -> Vec<&Class> {
        self.classes
            .iter()
            .filter(|c| c.name != class && self.supertype_closure(&c.name).contains(class))
            .collect()
    }

    pub fn direct_subclasses_of(&self, class: &str) -> Vec<&Class> {
        self.classes
            .iter()
            .filter(|c| c.super_types.iter().any(|s| s == class))
            .collect()
    }

    /// Classes in inheritance order: supertypes first (depth first, in
    /// declaration order), then `class`. Each class appears once.
    fn linearization(&self, class: &str) -> Vec<&str> {
        fn visit<'m>(
            mm: &'m Metamodel,
            class: &str,
            on_path: &mut BTreeSet<String>,
            out: &mut Vec<&'m str>,
        ) {
            let Some(c) = mm.class(class) else { return };
            if out.contains(&c.name.as_str()) || !on_path.insert(c.name.clone()) {
                return;
            }
            for sup in &c.super_types {
                visit(mm, sup, on_path, out);
            }
            on_path.remove(&c.name);
            out.push(&c.name);
        }
        let mut out = Vec::new();
        visit(self, class, &mut BTreeSet::new(), &mut out);
        out
    }

    /// Every feature visible on `class` as `(owner, feature)`: inherited first,
    /// then own, each in declaration order, without duplicates.
    pub fn all_features(&self, class: &str) -> Result<Vec<(&str, Feature<'_>)>, MetamodelError> {
        self.require_class(class)?;
        Ok(self
            .linearization(class)
            .into_iter()
            .filter_map(|c| self.class(c))
            .flat_map(|c| c.own_features().map(move |f| (c.name.as_str(), f)))
            .collect())
    }

    /// Feature names visible on `class` or on any of its subclasses.
    pub fn feature_names_in_hierarchy(&self, class: &str) -> BTreeSet<String> {
        let mut names = BTreeSet::new();
        let mut scope = vec![class];
        scope.extend(self.subclasses_of(class).iter().map(|c| c.name.as_str()));
        for c in scope {
            if let Ok(features) = self.all_features(c) {
                names.extend(features.iter().map(|(_, f)| f.name().to_owned()));
            }
        }
        names
    }

    /// Checks every metamodel invariant; an empty result means valid.
    pub fn validate(&self) -> Vec<MetamodelViolation> {
        let mut out = Vec::new();
        let mut push = |at: QualifiedName, kind, message: String| {
            out.push(MetamodelViolation { at, kind, message })
        };

        if !is_identifier(&self.name) {
            push(
                QualifiedName::new(self.name.clone()),
                MetamodelViolationKind::InvalidName,
                format!("metamodel name `{}` is not an identifier", self.name),
            );
        }

        let mut type_names: BTreeMap<&str, usize> = BTreeMap::new();
        for name in self
            .classes
            .iter()
            .map(|c| c.name.as_str())
            .chain(self.enumerations.iter().map(|e| e.name.as_str()))
        {
            *type_names.entry(name).or_default() += 1;
        }
        for (name, count) in &type_names {
            if *count > 1 {
                push(
                    QualifiedName::new(*name),
                    MetamodelViolationKind::DuplicateName,
                    format!("type name `{name}` declared {count} times"),
                );
            }
            if is_primitive(name) {
                push(
                    QualifiedName::new(*name),
                    MetamodelViolationKind::DuplicateName,
                    format!("`{name}` collides with a primitive type"),
                );
            }
            if !is_identifier(name) {
                push(
                    QualifiedName::new(*name),
                    MetamodelViolationKind::InvalidName,
                    format!("`{name}` is not an identifier"),
                );
            }
        }

        for e in &self.enumerations {
            let at = QualifiedName::new(e.name.clone());
            if e.literals.is_empty() {
                push(
                    at.clone(),
                    MetamodelViolationKind::InvalidEnumeration,
                    "enumeration has no literals".into(),
                );
            }
            let mut seen = BTreeSet::new();
            for literal in &e.literals {
                if !seen.insert(literal) {
                    push(
                        QualifiedName::member_of(&e.name, literal),
                        MetamodelViolationKind::InvalidEnumeration,
                        format!("duplicate literal `{literal}`"),
                    );
                }
                if !is_identifier(literal) {
                    push(
                        QualifiedName::member_of(&e.name, literal),
                        MetamodelViolationKind::InvalidName,
                        format!("literal `{literal}` is not an identifier"),
                    );
                }
            }
        }

        for c in &self.classes {
            let at = QualifiedName::new(c.name.clone());
            for sup in &c.super_types {
                if self.class(sup).is_none() {
                    push(
                        at.clone(),
                        MetamodelViolationKind::UnresolvedSuperType,
                        format!("supertype `{sup}` is not a declared class"),
                    );
                }
            }
            let mut dup = BTreeSet::new();
            for sup in &c.super_types {
                if !dup.insert(sup) {
                    push(
                        at.clone(),
                        MetamodelViolationKind::DuplicateName,
                        format!("supertype `{sup}` listed twice"),
                    );
                }
            }
            for a in &c.attributes {
                let fq = QualifiedName::member_of(&c.name, &a.name);
                if !is_primitive(&a.type_name) && self.enumeration(&a.type_name).is_none() {
                    push(
                        fq.clone(),
                        MetamodelViolationKind::UnresolvedType,
                        format!("attribute type `{}` is not a primitive or enumeration", a.type_name),
                    );
                }
                check_bounds(&fq, a.lower, a.upper, &mut push);
                if !is_identifier(&a.name) {
                    push(
                        fq,
                        MetamodelViolationKind::InvalidName,
                        format!("`{}` is not an identifier", a.name),
                    );
                }
            }
            for r in &c.references {
                let fq = QualifiedName::member_of(&c.name, &r.name);
                check_bounds(&fq, r.lower, r.upper, &mut push);
                if !is_identifier(&r.name) {
                    push(
                        fq.clone(),
                        MetamodelViolationKind::InvalidName,
                        format!("`{}` is not an identifier", r.name),
                    );
                }
                if self.class(&r.target).is_none() {
                    push(
                        fq,
                        MetamodelViolationKind::UnresolvedTarget,
                        format!("reference target `{}` is not a declared class", r.target),
                    );
                    continue;
                }
                if let Some(opposite) = &r.opposite {
                    self.check_opposite(c, r, opposite, &fq, &mut push);
                }
            }
        }

        for cycle in self.inheritance_cycles() {
            push(
                QualifiedName::new(cycle[0].clone()),
                MetamodelViolationKind::InheritanceCycle,
                format!("inheritance cycle through {}", cycle.join(", ")),
            );
        }

        for c in &self.classes {
            let mut by_name: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
            for (owner, feature) in self.all_features(&c.name).unwrap_or_default() {
                by_name.entry(feature.name()).or_default().insert(owner);
            }
            // own duplicates are not visible through the owner set
            let mut own = BTreeMap::<&str, usize>::new();
            for f in c.own_features() {
                *own.entry(f.name()).or_default() += 1;
            }
            for (name, owners) in by_name {
                let own_count = own.get(name).copied().unwrap_or(0);
                if owners.len() > 1 || own_count > 1 {
                    let owners: Vec<_> = owners.into_iter().collect();
                    push(
                        QualifiedName::member_of(&c.name, name),
                        MetamodelViolationKind::FeatureClash,
                        format!("feature `{name}` declared more than once (owners: {})", owners.join(", ")),
                    );
                }
            }
        }

        out.sort();
        out.dedup();
        out
    }

    fn check_opposite(
        &self,
        class: &Class,
        reference: &Reference,
        opposite: &str,
        at: &QualifiedName,
        push: &mut impl FnMut(QualifiedName, MetamodelViolationKind, String),
    ) {
        let other = self
            .find_feature(&reference.target, opposite)
            .and_then(|(_, f)| f.as_reference());
        let Some(other) = other else {
            push(
                at.clone(),
                MetamodelViolationKind::InvalidOpposite,
                format!("opposite `{}.{opposite}` is not a reference", reference.target),
            );
            return;
        };
        if other.opposite.as_deref() != Some(reference.name.as_str())
            || !self.supertype_closure(&class.name).contains(&other.target)
        {
            push(
                at.clone(),
                MetamodelViolationKind::InvalidOpposite,
                format!("opposite `{}.{opposite}` does not point back", reference.target),
            );
        }
        if std::ptr::eq(other, reference) && reference.containment {
            push(
                at.clone(),
                MetamodelViolationKind::InvalidOpposite,
                "containment reference is its own opposite".into(),
            );
        }
        if other.containment && reference.containment {
            push(
                at.clone(),
                MetamodelViolationKind::InvalidOpposite,
                "both ends of an opposite pair are containments".into(),
            );
        }
    }

    /// Groups of classes that lie on a common inheritance cycle, each sorted.
    fn inheritance_cycles(&self) -> Vec<Vec<String>> {
        let reach: BTreeMap<&str, BTreeSet<String>> = self
            .classes
            .iter()
            .map(|c| {
                let mut strict = BTreeSet::new();
                for sup in &c.super_types {
                    strict.extend(self.supertype_closure(sup));
                }
                (c.name.as_str(), strict)
            })
            .collect();
        let mut groups: Vec<Vec<String>> = Vec::new();
        for (name, strict) in &reach {
            if !strict.contains(*name) {
                continue;
            }
            let mut group: Vec<String> = strict
                .iter()
                .filter(|other| reach.get(other.as_str()).is_some_and(|r| r.contains(*name)))
                .cloned()
                .collect();
            group.sort();
            if !groups.contains(&group) {
                groups.push(group);
            }
        }
        groups
    }
}

fn check_bounds(
    at: &QualifiedName,
    lower: u32,
    upper: Upper,
    push: &mut impl FnMut(QualifiedName, MetamodelViolationKind, String),
) {
    let ok = match upper {
        Upper::Bounded(0) => false,
        Upper::Bounded(u) => lower <= u,
        Upper::Unbounded => true,
    };
    if !ok {
        push(
            at.clone(),
            MetamodelViolationKind::InvalidBounds,
            format!("bounds {lower}..{upper} are invalid"),
        );
    }
}
