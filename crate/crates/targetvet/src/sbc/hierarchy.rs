//! Class hierarchy built over the parsed model: super/interface maps, the
//! children inverse map, and per-class overload resolution, all queryable in
//! O(1) amortized after construction.

use super::model::*;
use super::parser::SbcError;
use super::types::*;
use crate::config::LifecycleTable;
use std::collections::{BTreeMap, BTreeSet, HashMap};

#[derive(Debug, Clone)]
pub struct ClassHierarchy {
    supers: HashMap<ClassName, ClassName>,
    interfaces: HashMap<ClassName, Vec<ClassName>>,
    /// Inverse of the super map. Keys include opaque framework classes that
    /// app classes extend.
    children: HashMap<ClassName, Vec<ClassName>>,
    /// Classes declaring `.implements` per interface, including opaque ones.
    implementers: HashMap<ClassName, Vec<ClassName>>,
    /// (class, sub-signature) -> class that defines the method under
    /// single-inheritance resolution.
    overloads: HashMap<ClassName, BTreeMap<String, ClassName>>,
}

impl ClassHierarchy {
    pub fn build(model: &AppModel) -> Result<Self, SbcError> {
        let mut supers = HashMap::new();
        let mut interfaces: HashMap<ClassName, Vec<ClassName>> = HashMap::new();
        let mut children: HashMap<ClassName, Vec<ClassName>> = HashMap::new();
        let mut implementers: HashMap<ClassName, Vec<ClassName>> = HashMap::new();

        for class in model.classes.values() {
            if let Some(sup) = &class.super_class {
                supers.insert(class.name.clone(), sup.clone());
                children
                    .entry(sup.clone())
                    .or_default()
                    .push(class.name.clone());
            }
            if !class.interfaces.is_empty() {
                interfaces.insert(class.name.clone(), class.interfaces.clone());
                for iface in &class.interfaces {
                    implementers
                        .entry(iface.clone())
                        .or_default()
                        .push(class.name.clone());
                }
            }
        }
        for v in children.values_mut() {
            v.sort();
        }
        for v in implementers.values_mut() {
            v.sort();
        }

        // Cycle check over app-declared super edges. Opaque supers terminate
        // chains, so only edges between app classes can cycle.
        for start in model.classes.keys() {
            let mut seen = BTreeSet::new();
            let mut cur = start.clone();
            while let Some(sup) = supers.get(&cur) {
                if !model.classes.contains_key(sup) {
                    break;
                }
                if !seen.insert(cur.clone()) {
                    return Err(SbcError::CyclicHierarchy(cur.descriptor()));
                }
                cur = sup.clone();
            }
        }

        // Overload maps, computed parent-first so each class inherits and
        // then overrides its super's entries.
        let mut overloads: HashMap<ClassName, BTreeMap<String, ClassName>> = HashMap::new();
        fn resolve_map(
            name: &ClassName,
            model: &AppModel,
            supers: &HashMap<ClassName, ClassName>,
            out: &mut HashMap<ClassName, BTreeMap<String, ClassName>>,
        ) {
            if out.contains_key(name) {
                return;
            }
            let mut map = match supers.get(name) {
                Some(sup) if model.classes.contains_key(sup) => {
                    resolve_map(sup, model, supers, out);
                    out[sup].clone()
                }
                _ => BTreeMap::new(),
            };
            if let Some(class) = model.class(name) {
                for m in &class.methods {
                    map.insert(m.sig.subsig(), name.clone());
                }
            }
            out.insert(name.clone(), map);
        }
        for name in model.classes.keys() {
            resolve_map(name, model, &supers, &mut overloads);
        }

        Ok(ClassHierarchy {
            supers,
            interfaces,
            children,
            implementers,
            overloads,
        })
    }

    pub fn super_of(&self, class: &ClassName) -> Option<&ClassName> {
        self.supers.get(class)
    }

    pub fn interfaces_of(&self, class: &ClassName) -> &[ClassName] {
        self.interfaces.get(class).map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn children_of(&self, class: &ClassName) -> &[ClassName] {
        self.children.get(class).map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn implementers_of(&self, iface: &ClassName) -> &[ClassName] {
        self.implementers
            .get(iface)
            .map(|v| v.as_slice())
            .unwrap_or(&[])
    }

    /// All transitive subclasses, depth-first in sorted order.
    pub fn descendants(&self, class: &ClassName) -> Vec<ClassName> {
        let mut out = Vec::new();
        let mut stack: Vec<ClassName> = self.children_of(class).to_vec();
        stack.reverse();
        while let Some(c) = stack.pop() {
            out.push(c.clone());
            let mut kids = self.children_of(&c).to_vec();
            kids.reverse();
            stack.extend(kids);
        }
        out
    }

    /// Whether `ancestor` appears in `class`'s declared super chain
    /// (including opaque framework supers at the end).
    pub fn has_ancestor(&self, class: &ClassName, ancestor: &ClassName) -> bool {
        let mut cur = class.clone();
        while let Some(sup) = self.supers.get(&cur) {
            if sup == ancestor {
                return true;
            }
            cur = sup.clone();
        }
        false
    }

    /// Interfaces declared by the class or any app ancestor.
    pub fn all_interfaces(&self, class: &ClassName) -> Vec<ClassName> {
        let mut out = Vec::new();
        let mut cur = Some(class.clone());
        while let Some(c) = cur {
            for i in self.interfaces_of(&c) {
                if !out.contains(i) {
                    out.push(i.clone());
                }
            }
            cur = self.supers.get(&c).cloned();
        }
        out
    }

    /// Which class defines `subsig` for receivers of `class`, under
    /// single-inheritance resolution.
    pub fn resolve_subsig(&self, class: &ClassName, subsig: &str) -> Option<&ClassName> {
        self.overloads.get(class)?.get(subsig)
    }

    /// Nearest definition of a method with the given name in `class`'s
    /// chain. Lifecycle handlers are matched by name since SBC component
    /// classes keep the conventional handler names.
    pub fn resolve_by_name<'m>(
        &self,
        model: &'m AppModel,
        class: &ClassName,
        name: &str,
    ) -> Option<&'m Method> {
        let mut cur = Some(class.clone());
        while let Some(c) = cur {
            if let Some(cls) = model.class(&c) {
                if let Some(m) = cls.methods.iter().find(|m| m.sig.name == name) {
                    return Some(m);
                }
            }
            cur = self.supers.get(&c).cloned();
        }
        None
    }
}

/// Entry points: the union, over registered components, of the lifecycle
/// handlers that the component class (or its inherited chain) defines.
/// Unknown component classes contribute nothing and produce a warning.
pub fn entry_points(
    model: &AppModel,
    hierarchy: &ClassHierarchy,
    lifecycle: &LifecycleTable,
) -> (BTreeSet<MethodSig>, Vec<String>) {
    let mut entries = BTreeSet::new();
    let mut warnings = Vec::new();
    for comp in &model.manifest.components {
        if model.class(&comp.class).is_none() {
            warnings.push(format!(
                "manifest component {} has no class in the app",
                comp.class.descriptor()
            ));
            continue;
        }
        for handler in lifecycle.handlers(comp.kind) {
            if let Some(m) = hierarchy.resolve_by_name(model, &comp.class, handler) {
                entries.insert(m.sig.clone());
            }
        }
    }
    (entries, warnings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::LifecycleTable;
    use crate::sbc::parser::parse_app_from_sources;

    fn model(text: &str, manifest: &str) -> AppModel {
        parse_app_from_sources(
            &[("app.sbc".to_string(), text.to_string())],
            manifest,
            &["java/".into(), "javax/".into(), "android/".into()],
        )
        .unwrap()
    }

    const CHILD: &str = "\
.class public Lcom/connectsdk/service/netcast/NetcastHttpServer;
.method public start()V
  return-void
.end method
.class public Lcom/connectsdk/service/netcast/ChildServer;
.super Lcom/connectsdk/service/netcast/NetcastHttpServer;
.method public stop()V
  return-void
.end method
";

    #[test]
    fn children_map_inverts_supers() {
        let m = model(CHILD, "");
        let h = ClassHierarchy::build(&m).unwrap();
        let base = ClassName::from_dotted("com.connectsdk.service.netcast.NetcastHttpServer");
        let child = ClassName::from_dotted("com.connectsdk.service.netcast.ChildServer");
        assert_eq!(h.children_of(&base), &[child.clone()]);
        assert_eq!(h.super_of(&child), Some(&base));
        // Non-overloaded subsig resolves to the base definition.
        assert_eq!(h.resolve_subsig(&child, "start:()V"), Some(&base));
        assert_eq!(h.resolve_subsig(&child, "stop:()V"), Some(&child));
    }

    #[test]
    fn missing_super_means_implicit_root() {
        let m = model(".class Lcom/x/A;\n", "");
        let h = ClassHierarchy::build(&m).unwrap();
        assert_eq!(h.super_of(&ClassName::from_dotted("com.x.A")), None);
    }

    #[test]
    fn cycle_detected() {
        let text = "\
.class Lcom/x/A;
.super Lcom/x/B;
.class Lcom/x/B;
.super Lcom/x/A;
";
        let m = model(text, "");
        assert!(matches!(
            ClassHierarchy::build(&m),
            Err(SbcError::CyclicHierarchy(_))
        ));
    }

    #[test]
    fn transitive_descendants_match_bfs_oracle() {
        // Random-ish forest of 50 classes built deterministically: class i
        // extends class i/3 for i > 0.
        let mut text = String::new();
        for i in 0..50u32 {
            text.push_str(&format!(".class Lgen/C{i};\n"));
            if i > 0 {
                text.push_str(&format!(".super Lgen/C{};\n", i / 3));
            }
        }
        let m = model(&text, "");
        let h = ClassHierarchy::build(&m).unwrap();

        // Brute-force BFS over the declared edges.
        let edges: Vec<(u32, u32)> = (1..50u32).map(|i| (i / 3, i)).collect();
        for root in 0..50u32 {
            let mut want = BTreeSet::new();
            let mut frontier = vec![root];
            while let Some(n) = frontier.pop() {
                for &(p, c) in &edges {
                    if p == n && want.insert(c) {
                        frontier.push(c);
                    }
                }
            }
            let got: BTreeSet<u32> = h
                .descendants(&ClassName::from_slashed(&format!("gen/C{root}")))
                .into_iter()
                .map(|c| c.slashed()["gen/C".len()..].parse().unwrap())
                .collect();
            assert_eq!(got, want, "root {root}");
        }
    }

    const COMPONENT: &str = "\
.class public Lcom/x/Main;
.super Landroid/app/Activity;
.method public onCreate()V
  return-void
.end method
.method public onResume()V
  return-void
.end method
.class public Lcom/x/Hidden;
.super Landroid/app/Activity;
.method public onCreate()V
  return-void
.end method
";

    #[test]
    fn entry_points_from_registered_components() {
        let m = model(COMPONENT, "activity Lcom/x/Main;\n");
        let h = ClassHierarchy::build(&m).unwrap();
        let (entries, warnings) = entry_points(&m, &h, &LifecycleTable::default());
        let names: Vec<String> = entries.iter().map(|s| s.render_search()).collect();
        assert!(names.contains(&"Lcom/x/Main;.onCreate:()V".to_string()));
        assert!(names.contains(&"Lcom/x/Main;.onResume:()V".to_string()));
        // Hidden is present in SBC but absent from the manifest: no entry.
        assert!(!names.iter().any(|n| n.contains("Hidden")));
        assert!(warnings.is_empty());
    }

    #[test]
    fn empty_manifest_means_no_entries() {
        let m = model(COMPONENT, "");
        let h = ClassHierarchy::build(&m).unwrap();
        let (entries, _) = entry_points(&m, &h, &LifecycleTable::default());
        assert!(entries.is_empty());
    }

    #[test]
    fn unknown_component_class_warns() {
        let m = model(COMPONENT, "activity Lcom/x/Main;\nservice Lcom/x/Ghost;\n");
        let h = ClassHierarchy::build(&m).unwrap();
        let (entries, warnings) = entry_points(&m, &h, &LifecycleTable::default());
        assert!(!entries.is_empty());
        assert_eq!(warnings.len(), 1);
    }
}
