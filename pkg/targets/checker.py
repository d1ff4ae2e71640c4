"""
Semantic checker of the reference WGSL front-end.

Runs on an error-free syntax tree and raises ``CheckError`` at the first
violation. Rules covered:

* name resolution with block scoping and shadowing of module names,
* abstract numerics with constant folding of scalar const-expressions
  (range, overflow and division-by-zero errors),
* full expression typing including references, pointers, swizzles and the
  builtin catalog,
* address spaces and access modes of variables and pointers,
* entry-point attributes and IO bindings,
* struct member uniqueness, array size positivity, runtime-array placement,
* break/continue/return placement and the missing-return check,
* the recursion ban and per-stage global usage.

Every decision point reports a ``checker.`` site to the tracer.
"""

import math
from collections import ChainMap
from contextlib import contextmanager
from typing import Dict, List, NamedTuple, Optional, Set, Tuple

from ir.audit import BUILTIN_IO, STAGES
from ir.builtins import BUILTINS, POINTER_BUILTINS, builtin_result
from ir.types import Vector as IrVector
from syntax.lexer import number_value
from syntax.nodes import AstNode, NodeKind
from targets.wgsl_types import (
    Ty, BOOL, I32, U32, SCALAR_KINDS, ABSTRACT_KINDS, INT_KINDS, FLOAT_KINDS, SIGNED_KINDS,
    KIND_RANGES, ADDRESS_SPACES, StructTable,
    scalar, vector, matrix, array, struct, pointer, reference,
    element_kind, with_kind, concretize, kind_converts, can_convert, common_kind, fits,
    is_constructible, is_host_shareable, has_runtime_array, to_shape, from_shape, component_count,
)


class CheckError(Exception):
    """A program that breaks a typing or validation rule."""


# ============================================================================
# Tables
# ============================================================================

VECTOR_SIZES = {'vec2': 2, 'vec3': 3, 'vec4': 4}
MATRIX_SHAPES = {f"mat{c}x{r}": (c, r) for c in (2, 3, 4) for r in (2, 3, 4)}

TYPE_ALIASES = {f"vec{n}{s}": vector(n, kind)
                for n in (2, 3, 4) for s, kind in (('i', 'i32'), ('u', 'u32'), ('f', 'f32'))}
TYPE_ALIASES.update({f"{name}f": matrix(c, r) for name, (c, r) in MATRIX_SHAPES.items()})

PREDECLARED = (frozenset(SCALAR_KINDS) | set(VECTOR_SIZES) | set(MATRIX_SHAPES) | set(TYPE_ALIASES)
               | {'array', 'ptr', 'atomic', 'f16'} | set(BUILTINS) | POINTER_BUILTINS)

SWIZZLE_SETS = ('xyzw', 'rgba')
COMPARISONS = frozenset({'==', '!=', '<', '<=', '>', '>='})
BITWISE = frozenset({'&', '|', '^'})
ARITHMETIC = frozenset({'+', '-', '*', '/', '%'})
INTERPOLATION_TYPES = frozenset({'perspective', 'linear', 'flat'})
INTERPOLATION_SAMPLING = frozenset({'center', 'centroid', 'sample'})

FOR_INIT_KINDS = frozenset({NodeKind.VAR_STMT, NodeKind.LET_STMT, NodeKind.ASSIGN_STMT,
                            NodeKind.INCREMENT_STMT, NodeKind.CALL_STMT})
FOR_UPDATE_KINDS = frozenset({NodeKind.ASSIGN_STMT, NodeKind.INCREMENT_STMT, NodeKind.CALL_STMT})
LOOP_KINDS = frozenset({NodeKind.LOOP_STMT, NodeKind.FOR_STMT, NodeKind.WHILE_STMT})


def _io_type(ty) -> Ty:
    if isinstance(ty, IrVector):
        return vector(ty.size, ty.element.kind)
    return scalar(ty.kind)


# builtin IO value -> (type, input stages, output stages)
BUILTIN_VALUES = {name: (_io_type(ty), ins, outs) for name, (ty, ins, outs) in BUILTIN_IO.items()}


class Val(NamedTuple):
    """Type of an expression plus what is known about its value."""
    ty: Ty
    const: bool = False  # const-expression
    value: object = None  # folded value of scalar const-expressions
    component: bool = False  # reference to a single vector component


class _Sym(NamedTuple):
    kind: str  # var | let | param | const | override | global | function | struct
    val: Optional[Val] = None


class _Signature(NamedTuple):
    params: Tuple[Tuple[str, Ty], ...]
    result: Optional[Ty]
    stage: Optional[str]
    must_use: bool


# ============================================================================
# Tree helpers
# ============================================================================

def _is_token(node: AstNode, text: str) -> bool:
    return node.kind == NodeKind.TOKEN and node.text == text


def _operands(node: AstNode) -> List[AstNode]:
    return [c for c in node.children if c.kind != NodeKind.TOKEN]


def _first(node: AstNode, kind: NodeKind) -> Optional[AstNode]:
    return next((c for c in node.children if c.kind == kind), None)


def _name_of(node: AstNode) -> str:
    return _first(node, NodeKind.IDENTIFIER).text


def _plain_name(node: AstNode) -> Optional[str]:
    """Text of a bare name, parsed either as identifier or as untemplated type."""
    if node.kind == NodeKind.IDENTIFIER:
        return node.text
    if node.kind == NodeKind.TYPE_EXPR and len(node.children) == 1:
        return node.children[0].text
    return None


def _decl_parts(node: AstNode):
    """(template names, name, type node, initializer node) of a declaration."""
    template, name, ty, init = None, None, None, None
    after = None
    for child in node.children:
        if child.kind == NodeKind.TEMPLATE_LIST:
            template = [c.text for c in child.children if c.kind == NodeKind.IDENTIFIER]
        elif _is_token(child, ':'):
            after = ':'
        elif _is_token(child, '='):
            after = '='
        elif child.kind in (NodeKind.TOKEN, NodeKind.ATTRIBUTE):
            continue
        elif after is None and name is None:
            name = child.text
        elif after == ':' and ty is None:
            ty = child
        elif after == '=':
            init = child
    return template, name, ty, init


def _trunc_div(x: int, y: int) -> int:
    q = abs(x) // abs(y)
    return q if (x < 0) == (y < 0) else -q


# ============================================================================
# Checker
# ============================================================================

class Checker:

    def __init__(self, root: AstNode, tracer=None):
        self.root = root
        self._hit = tracer.hit if tracer is not None else None
        self.module: Dict[str, _Sym] = {}
        self.struct_nodes: Dict[str, AstNode] = {}
        self.structs: StructTable = {}
        self.member_bindings: Dict[str, List[Optional[tuple]]] = {}
        self._resolving: Set[str] = set()
        self.const_nodes: Dict[str, AstNode] = {}
        self._const_active: Set[str] = set()
        self.global_nodes: Dict[str, AstNode] = {}
        self.global_spaces: Dict[str, Tuple[str, str]] = {}
        self._bindings: Set[Tuple[int, int]] = set()
        self.function_nodes: Dict[str, AstNode] = {}
        self.signatures: Dict[str, _Signature] = {}
        self.calls: Dict[str, Set[str]] = {}
        self.global_uses: Dict[str, Set[str]] = {}
        # state of the function being checked
        self.scope: ChainMap = ChainMap()
        self.function: Optional[str] = None
        self.signature: Optional[_Signature] = None
        self._loops = 0
        self._breakable = 0
        self._continuing_direct = False
        self._in_continuing = False

    def _trace(self, site: str):
        if self._hit is not None:
            self._hit(site)

    def _fail(self, tag: str, message: str):
        self._trace(f'checker.error.{tag}')
        raise CheckError(message)

    # ==================================================================
    # module
    # ==================================================================

    def check(self):
        self._trace('checker.module')
        self._collect()
        for name in self.struct_nodes:
            self._struct(name)
        for name in self.const_nodes:
            self._module_const(name)
        for name in self.global_nodes:
            self._global(name)
        for name, decl in self.function_nodes.items():
            self.signatures[name] = self._signature(name, decl)
        for name, decl in self.function_nodes.items():
            self._function_body(name, decl)
        self._check_recursion()
        self._check_stage_access()
        if any(sig.stage for sig in self.signatures.values()):
            self._trace('checker.module.entry_points')

    def _collect(self):
        for decl in self.root.children:
            kind = decl.kind
            if kind == NodeKind.EMPTY_STMT:
                self._trace('checker.decl.empty')
                continue
            if kind == NodeKind.STRUCT_DECL:
                name = _name_of(decl)
                self._declare_module(name, _Sym('struct'))
                self.struct_nodes[name] = decl
            elif kind == NodeKind.FUNCTION_DECL:
                name = _name_of(decl)
                self._declare_module(name, _Sym('function'))
                self.function_nodes[name] = decl
            elif kind == NodeKind.GLOBAL_VAR_DECL:
                name = _decl_parts(decl)[1]
                self._declare_module(name, _Sym('global'))
                self.global_nodes[name] = decl
            elif kind == NodeKind.CONST_DECL:
                name = _decl_parts(decl)[1]
                override = any(_is_token(c, 'override') for c in decl.children)
                self._declare_module(name, _Sym('override' if override else 'const'))
                self.const_nodes[name] = decl
            else:
                self._fail('decl.unexpected', f"unexpected {kind.value} at module scope")
            self._trace(f'checker.decl.{kind.value}')

    def _check_name(self, name: str):
        if name == '_':
            self._fail('name.underscore', "'_' cannot be declared")
        if name.startswith('__'):
            self._fail('name.reserved', f"identifier '{name}' starts with '__'")

    def _declare_module(self, name: str, sym: _Sym):
        self._check_name(name)
        if name in self.module:
            self._fail('decl.duplicate', f"redeclaration of '{name}'")
        self.module[name] = sym

    def _attrs(self, children, where: str) -> List[Tuple[str, List[AstNode]]]:
        attrs = []
        for child in children:
            if child.kind != NodeKind.ATTRIBUTE:
                continue
            name = child.children[1].text if len(child.children) > 1 else ''
            args_node = _first(child, NodeKind.ARG_LIST)
            args = _operands(args_node) if args_node is not None else []
            if any(name == seen for seen, _ in attrs):
                self._fail('attribute.duplicate', f"duplicate @{name} on {where}")
            attrs.append((name, args))
        return attrs

    # ------------------------------------------------------------------
    # structs
    # ------------------------------------------------------------------

    def _struct(self, name: str):
        if name in self.structs:
            return
        if name in self._resolving:
            self._fail('struct.cycle', f"struct {name} contains itself")
        self._resolving.add(name)
        decl = self.struct_nodes[name]
        if self._attrs(decl.children, f"struct {name}"):
            self._fail('struct.attribute', f"attributes are not allowed on struct {name}")
        member_nodes = [c for c in decl.children if c.kind == NodeKind.STRUCT_MEMBER]
        if not member_nodes:
            self._fail('struct.empty', f"struct {name} has no members")
        members, bindings = [], []
        for i, member in enumerate(member_nodes):
            member_name = _name_of(member)
            self._check_name(member_name)
            if any(m == member_name for m, _ in members):
                self._fail('struct.duplicate_member', f"struct {name} has two members named {member_name}")
            ty = self.resolve_type(_first(member, NodeKind.TYPE_EXPR))
            if has_runtime_array(ty, self.structs):
                if not (ty.cat == 'array' and ty.n == 0 and i == len(member_nodes) - 1):
                    self._fail('struct.runtime_array', "a runtime-sized array must be the last struct member")
                self._trace('checker.struct.runtime_array')
            elif not is_constructible(ty, self.structs):
                self._fail('struct.member_type', f"member {member_name} has type {ty}")
            bindings.append(self._io_binding(self._attrs(member.children, f"member {member_name}"),
                                             f"member {member_name}", member=True))
            members.append((member_name, ty))
        self._resolving.discard(name)
        self.structs[name] = members
        self.member_bindings[name] = bindings
        self._trace('checker.struct')

    # ------------------------------------------------------------------
    # types
    # ------------------------------------------------------------------

    def resolve_type(self, node: Optional[AstNode]) -> Ty:
        if node is None or node.kind != NodeKind.TYPE_EXPR:
            self._fail('type.expected', "expected a type")
        name = node.children[0].text
        args = _operands(node)[1:]
        if not args:
            return self._named_type(name)
        if name in VECTOR_SIZES and len(args) == 1:
            elem = self.resolve_type(args[0])
            if elem.cat != 'scalar':
                self._fail('type.vector_element', f"vector of {elem}")
            self._trace('checker.type.vector')
            return vector(VECTOR_SIZES[name], elem.kind)
        if name in MATRIX_SHAPES and len(args) == 1:
            elem = self.resolve_type(args[0])
            if elem.cat != 'scalar' or elem.kind != 'f32':
                self._fail('type.matrix_element', f"matrix of {elem}")
            self._trace('checker.type.matrix')
            return matrix(*MATRIX_SHAPES[name])
        if name == 'array' and len(args) in (1, 2):
            return self._array_type(args)
        if name == 'ptr' and len(args) in (2, 3):
            return self._pointer_type(args)
        if name == 'atomic':
            self._fail('type.atomic', "atomic types are not supported")
        self._fail('type.template', f"bad template arguments for '{name}'")

    def _named_type(self, name: str) -> Ty:
        if name in SCALAR_KINDS:
            self._trace('checker.type.scalar')
            return scalar(name)
        if name == 'f16':
            self._fail('type.f16', "f16 requires 'enable f16'")
        if name in TYPE_ALIASES:
            self._trace('checker.type.alias')
            return TYPE_ALIASES[name]
        sym = self.module.get(name)
        if sym is not None and sym.kind == 'struct':
            self._struct(name)
            self._trace('checker.type.struct')
            return struct(name)
        if name in VECTOR_SIZES or name in MATRIX_SHAPES or name in ('array', 'ptr', 'atomic'):
            self._fail('type.missing_template', f"'{name}' needs template arguments")
        if sym is not None or name in self.scope:
            self._fail('type.not_a_type', f"'{name}' is not a type")
        self._fail('type.unknown', f"unknown type '{name}'")

    def _array_type(self, args: List[AstNode]) -> Ty:
        elem = self.resolve_type(args[0])
        if has_runtime_array(elem, self.structs) or not is_constructible(elem, self.structs):
            self._fail('type.array_element', f"array of {elem}")
        if len(args) == 1:
            self._trace('checker.type.runtime_array')
            return array(elem, 0)
        length = self.const_int(args[1], 'array length')
        if length <= 0:
            self._fail('type.array_size', f"array length {length} is not positive")
        self._trace('checker.type.array')
        return array(elem, length)

    def _pointer_type(self, args: List[AstNode]) -> Ty:
        space = _plain_name(args[0])
        if space not in ADDRESS_SPACES:
            self._fail('type.pointer_space', f"unknown address space '{space}'")
        elem = self.resolve_type(args[1])
        if elem.cat in ('ptr', 'ref'):
            self._fail('type.pointer_target', "pointer to a pointer")
        access = ''
        if len(args) == 3:
            access = _plain_name(args[2])
            if space != 'storage':
                self._fail('type.pointer_access', f"access mode on a {space} pointer")
            if access not in ('read', 'read_write'):
                self._fail('type.access_mode', f"unknown access mode '{access}'")
        self._trace(f'checker.type.ptr.{space}')
        return pointer(space, elem, access)

    def const_int(self, node: AstNode, what: str) -> int:
        val = self.const_expr(node)
        if val.ty.cat != 'scalar' or val.ty.kind not in INT_KINDS:
            self._fail('const.not_integer', f"{what} must be an integer")
        if val.value is None:
            self._fail('const.unknown', f"{what} could not be evaluated")
        return val.value

    def const_expr(self, node: AstNode) -> Val:
        val = self.value(node)
        if not val.const:
            self._fail('const.not_const', "expected a constant expression")
        return val

    # ------------------------------------------------------------------
    # module-scope values
    # ------------------------------------------------------------------

    @contextmanager
    def _module_context(self):
        saved = (self.scope, self.function, self.signature)
        self.scope, self.function, self.signature = ChainMap(), None, None
        try:
            yield
        finally:
            self.scope, self.function, self.signature = saved

    def _module_const(self, name: str) -> Val:
        sym = self.module[name]
        if sym.val is not None:
            return sym.val
        if name in self._const_active:
            self._fail('const.cycle', f"constant {name} refers to itself")
        self._const_active.add(name)
        decl = self.const_nodes[name]
        with self._module_context():
            _, _, ty_node, init = _decl_parts(decl)
            declared = self.resolve_type(ty_node) if ty_node is not None else None
            if sym.kind == 'override':
                val = self._override(name, decl, declared, init)
            else:
                if self._attrs(decl.children, f"constant {name}"):
                    self._fail('const.attribute', f"attributes are not allowed on constant {name}")
                if init is None:
                    self._fail('const.no_initializer', f"constant {name} needs an initializer")
                val = self._typed_const(self.const_expr(init), declared)
        self._const_active.discard(name)
        self.module[name] = _Sym(sym.kind, val)
        return val

    def _override(self, name: str, decl: AstNode, declared: Optional[Ty], init) -> Val:
        for attr, args in self._attrs(decl.children, f"override {name}"):
            if attr != 'id' or len(args) != 1:
                self._fail('override.attribute', f"unexpected @{attr} on override {name}")
            if self.const_int(args[0], '@id') < 0:
                self._fail('override.id', "@id must not be negative")
        if declared is None and init is None:
            self._fail('override.untyped', f"override {name} needs a type or an initializer")
        val = self.const_expr(init) if init is not None else None
        ty = declared if declared is not None else concretize(val.ty)
        if ty.cat != 'scalar' or ty.kind in ABSTRACT_KINDS:
            self._fail('override.type', f"override {name} must be a concrete scalar")
        if val is not None:
            if not can_convert(val.ty, ty):
                self._fail('override.mismatch', f"cannot initialize {ty} override with {val.ty}")
            self._convert_const(val, ty)
        self._trace('checker.override')
        return Val(ty)

    def _typed_const(self, val: Val, declared: Optional[Ty]) -> Val:
        if declared is None:
            self._trace('checker.const.inferred')
            return val
        if not can_convert(val.ty, declared):
            self._fail('const.mismatch', f"cannot initialize {declared} constant with {val.ty}")
        return self._convert_const(val, declared)

    def _global(self, name: str) -> Val:
        sym = self.module[name]
        if sym.val is not None:
            return sym.val
        decl = self.global_nodes[name]
        with self._module_context():
            template, _, ty_node, init = _decl_parts(decl)
            attrs = dict(self._attrs(decl.children, f"variable {name}"))
            if not template:
                self._fail('global.no_space', f"module-scope variable {name} needs an address space")
            space = template[0]
            if space not in ADDRESS_SPACES or len(template) > 2:
                self._fail('global.space', f"bad address space for {name}")
            if space == 'function':
                self._fail('global.function_space', "function address space at module scope")
            access = template[1] if len(template) > 1 else ''
            if access and space != 'storage':
                self._fail('global.access_mode', f"access mode on a {space} variable")
            if access not in ('', 'read', 'read_write'):
                self._fail('global.access_mode', f"unknown access mode '{access}'")
            declared = self.resolve_type(ty_node) if ty_node is not None else None
            if space in ('uniform', 'storage'):
                ty = self._resource(name, space, declared, init, attrs)
            else:
                ty = self._module_var(name, space, declared, init, attrs)
        self.global_spaces[name] = (space, access or ('read_write' if space != 'uniform' else 'read'))
        val = Val(reference(space, ty, access))
        self.module[name] = _Sym('global', val)
        self._trace(f'checker.global.{space}')
        return val

    def _resource(self, name: str, space: str, declared: Optional[Ty], init, attrs) -> Ty:
        if init is not None:
            self._fail('global.resource_init', f"{space} variable {name} cannot be initialized")
        if declared is None:
            self._fail('global.untyped', f"{space} variable {name} needs a type")
        if set(attrs) != {'group', 'binding'} or len(attrs['group']) != 1 or len(attrs['binding']) != 1:
            self._fail('global.binding', f"{space} variable {name} needs @group and @binding")
        key = (self.const_int(attrs['group'][0], '@group'), self.const_int(attrs['binding'][0], '@binding'))
        if min(key) < 0:
            self._fail('global.binding', "@group and @binding must not be negative")
        if key in self._bindings:
            self._fail('global.binding_conflict', f"@group({key[0]}) @binding({key[1]}) used twice")
        self._bindings.add(key)
        if not is_host_shareable(declared, self.structs):
            self._fail('global.host_shareable', f"{declared} cannot be used in the {space} address space")
        if space == 'uniform' and not is_constructible(declared, self.structs):
            self._fail('global.uniform_type', f"{declared} cannot be used in the uniform address space")
        return declared

    def _module_var(self, name: str, space: str, declared: Optional[Ty], init, attrs) -> Ty:
        if attrs:
            self._fail('global.attribute', f"{space} variable {name} takes no attributes")
        if space == 'workgroup' and init is not None:
            self._fail('global.workgroup_init', f"workgroup variable {name} cannot be initialized")
        val = self.const_expr(init) if init is not None else None
        ty = self._initialized_type(declared, val, 'global')
        if not is_constructible(ty, self.structs):
            self._fail('global.type', f"{ty} cannot be stored in a {space} variable")
        return ty

    # ------------------------------------------------------------------
    # functions
    # ------------------------------------------------------------------

    def _signature(self, name: str, decl: AstNode) -> _Signature:
        stage, workgroup, must_use = None, None, False
        with self._module_context():
            for attr, args in self._attrs(decl.children, f"function {name}"):
                if attr in STAGES:
                    if args or stage is not None:
                        self._fail('entry.stage', f"bad stage attribute on {name}")
                    stage = attr
                elif attr == 'workgroup_size':
                    if not 1 <= len(args) <= 3:
                        self._fail('entry.workgroup_size', "@workgroup_size takes one to three values")
                    workgroup = [self.const_int(a, '@workgroup_size') for a in args]
                    if min(workgroup) < 1:
                        self._fail('entry.workgroup_size', "workgroup size must be positive")
                elif attr == 'must_use' and not args:
                    must_use = True
                else:
                    self._fail('attribute.unknown', f"unexpected @{attr} on function {name}")
            if (workgroup is not None) != (stage == 'compute'):
                self._fail('entry.workgroup_size', "@workgroup_size goes with @compute and nothing else")

            params, io_params = [], []
            param_list = _first(decl, NodeKind.PARAM_LIST)
            for param in (param_list.children if param_list is not None else []):
                if param.kind != NodeKind.PARAM:
                    continue
                param_name = _name_of(param)
                self._check_name(param_name)
                if any(p == param_name for p, _ in params):
                    self._fail('fn.duplicate_param', f"parameter {param_name} declared twice")
                ty = self.resolve_type(_first(param, NodeKind.TYPE_EXPR))
                binding = self._io_binding(self._attrs(param.children, f"parameter {param_name}"),
                                           f"parameter {param_name}")
                if ty.cat == 'ptr':
                    if stage is not None:
                        self._fail('entry.pointer_param', "entry points take no pointers")
                    if ty.space not in ('function', 'private'):
                        self._fail('fn.pointer_param', f"pointer parameter in {ty.space} space")
                    self._trace('checker.fn.pointer_param')
                elif not is_constructible(ty, self.structs):
                    self._fail('fn.param_type', f"parameter {param_name} has type {ty}")
                if binding is not None and stage is None:
                    self._fail('fn.io_attribute', f"IO attribute on parameter {param_name} of {name}")
                params.append((param_name, ty))
                io_params.append((ty, binding))

            result, io_result = None, None
            ret = _first(decl, NodeKind.RETURN_TYPE)
            if ret is not None:
                result = self.resolve_type(_first(ret, NodeKind.TYPE_EXPR))
                if not is_constructible(result, self.structs):
                    self._fail('fn.result_type', f"{name} returns {result}")
                binding = self._io_binding(self._attrs(ret.children, f"result of {name}"), f"result of {name}")
                if binding is not None and stage is None:
                    self._fail('fn.io_attribute', f"IO attribute on the result of {name}")
                io_result = (result, binding)
            if must_use and (result is None or stage is not None):
                self._fail('fn.must_use', f"@must_use on {name}")
            if stage is not None:
                self._entry_io(name, stage, io_params, io_result)
        return _Signature(tuple(params), result, stage, must_use)

    def _io_binding(self, attrs, where: str, member: bool = False) -> Optional[tuple]:
        binding, interpolate, invariant = None, False, False
        for attr, args in attrs:
            if attr == 'builtin' and len(args) == 1 and _plain_name(args[0]) is not None:
                new = ('builtin', _plain_name(args[0]))
            elif attr == 'location' and len(args) == 1:
                location = self.const_int(args[0], '@location')
                if location < 0:
                    self._fail('io.location', "@location must not be negative")
                new = ('location', location)
            elif attr == 'interpolate' and 1 <= len(args) <= 2:
                names = [_plain_name(a) for a in args]
                if names[0] not in INTERPOLATION_TYPES or \
                        (len(names) == 2 and names[1] not in INTERPOLATION_SAMPLING):
                    self._fail('io.interpolate', f"bad @interpolate on {where}")
                interpolate = True
                continue
            elif attr == 'invariant' and not args:
                invariant = True
                continue
            elif member and attr in ('align', 'size') and len(args) == 1:
                amount = self.const_int(args[0], f"@{attr}")
                if amount <= 0 or (attr == 'align' and amount & (amount - 1)):
                    self._fail('io.layout', f"bad @{attr}({amount}) on {where}")
                self._trace(f'checker.member.{attr}')
                continue
            else:
                self._fail('attribute.unknown', f"unexpected @{attr} on {where}")
            if binding is not None:
                self._fail('io.two_bindings', f"{where} has two IO bindings")
            binding = new
        if interpolate and (binding is None or binding[0] != 'location'):
            self._fail('io.interpolate', "@interpolate needs @location")
        if invariant and binding != ('builtin', 'position'):
            self._fail('io.invariant', "@invariant needs @builtin(position)")
        return binding

    def _expand_io(self, ty: Ty, binding) -> List[tuple]:
        if binding is not None:
            return [(binding, ty)]
        if ty.cat == 'struct':
            self._trace('checker.entry.struct_io')
            members = self.structs[ty.name]
            return [(b, t) for (_, t), b in zip(members, self.member_bindings[ty.name])]
        return [(None, ty)]

    def _entry_io(self, name: str, stage: str, params, result):
        inputs = []
        for ty, binding in params:
            inputs.extend(self._expand_io(ty, binding))
        self._check_io(name, stage, inputs, output=False)
        if stage == 'compute':
            if result is not None:
                self._fail('entry.compute_result', f"compute entry point {name} returns a value")
            return
        if result is None:
            if stage == 'vertex':
                self._fail('entry.vertex_position', f"vertex entry point {name} must return a position")
            return
        outputs = self._expand_io(*result)
        self._check_io(name, stage, outputs, output=True)
        positions = sum(1 for b, _ in outputs if b == ('builtin', 'position'))
        if stage == 'vertex' and positions != 1:
            self._fail('entry.vertex_position', f"vertex result of {name} needs one @builtin(position)")
        self._trace(f'checker.entry.{stage}')

    def _check_io(self, name: str, stage: str, pairs, output: bool):
        what = 'result' if output else 'parameter'
        seen = set()
        for binding, ty in pairs:
            if binding is None:
                self._fail('entry.missing_binding', f"entry-point {what} of {name} without binding")
            if binding in seen:
                self._fail('entry.duplicate_binding', f"{binding[0]} {binding[1]} used twice in {name}")
            seen.add(binding)
            if binding[0] == 'builtin':
                entry = BUILTIN_VALUES.get(binding[1])
                if entry is None:
                    self._fail('entry.unknown_builtin', f"unknown builtin '{binding[1]}'")
                if stage not in entry[2 if output else 1]:
                    self._fail('entry.builtin_stage', f"builtin {binding[1]} is not a {stage} {what}")
                if entry[0] != ty:
                    self._fail('entry.builtin_type', f"builtin {binding[1]} must be {entry[0]}")
                self._trace(f'checker.entry.builtin.{binding[1]}')
            else:
                if stage == 'compute':
                    self._fail('entry.compute_location', "compute entry points take no locations")
                if ty.cat not in ('scalar', 'vector') or ty.kind not in ('i32', 'u32', 'f32'):
                    self._fail('entry.location_type', f"location {what} of type {ty}")
                self._trace('checker.entry.location')

    def _function_body(self, name: str, decl: AstNode):
        self.function, self.signature = name, self.signatures[name]
        self.calls[name], self.global_uses[name] = set(), set()
        self.scope = ChainMap({})
        self._loops = self._breakable = 0
        self._continuing_direct = self._in_continuing = False
        for param_name, ty in self.signature.params:
            self.scope[param_name] = _Sym('param', Val(ty))
        body = _operands(_first(decl, NodeKind.COMPOUND_STMT))
        # parameters and top-level body declarations share one scope
        self._statements(body)
        if self.signature.result is not None and not self._returns(body):
            self._fail('fn.missing_return', f"function {name} must return a value")
        self.function, self.signature = None, None
        self._trace('checker.fn.body')

    def _check_recursion(self):
        state: Dict[str, str] = {}

        def visit(name):
            if state.get(name) == 'done':
                return
            if state.get(name) == 'active':
                self._fail('fn.recursion', f"recursive call of {name}")
            state[name] = 'active'
            for callee in sorted(self.calls.get(name, ())):
                visit(callee)
            state[name] = 'done'

        for name in self.function_nodes:
            visit(name)

    def _check_stage_access(self):
        for name, sig in self.signatures.items():
            if sig.stage is None:
                continue
            reachable, stack = {name}, [name]
            while stack:
                for callee in self.calls.get(stack.pop(), ()):
                    if callee not in reachable:
                        reachable.add(callee)
                        stack.append(callee)
            for function in sorted(reachable):
                for used in sorted(self.global_uses.get(function, ())):
                    space, access = self.global_spaces[used]
                    if sig.stage == 'vertex' and space == 'storage' and access == 'read_write':
                        self._fail('entry.vertex_storage',
                                   f"vertex entry point {name} uses read_write storage {used}")
                    if space == 'workgroup' and sig.stage != 'compute':
                        self._fail('entry.workgroup_var', f"{sig.stage} entry point {name} uses workgroup {used}")

    # ==================================================================
    # statements
    # ==================================================================

    @contextmanager
    def _nested(self):
        saved = self.scope
        self.scope = saved.new_child()
        try:
            yield
        finally:
            self.scope = saved

    @contextmanager
    def _in_loop(self):
        saved = self._continuing_direct
        self._loops += 1
        self._breakable += 1
        self._continuing_direct = False
        try:
            yield
        finally:
            self._loops -= 1
            self._breakable -= 1
            self._continuing_direct = saved

    def _declare(self, name: str, sym: _Sym):
        self._check_name(name)
        if name in self.scope.maps[0]:
            self._fail('scope.duplicate', f"redeclaration of '{name}'")
        if name in self.module or len(self.scope.maps) > 1 and name in self.scope:
            self._trace('checker.scope.shadow')
        self.scope[name] = sym

    def _statements(self, stmts: List[AstNode]):
        for stmt in stmts:
            self.statement(stmt)

    def _block(self, node: AstNode):
        with self._nested():
            self._statements(_operands(node))

    def statement(self, node: AstNode):
        handler = self._STATEMENTS.get(node.kind)
        if handler is None:
            if node.kind == NodeKind.CONTINUING_STMT:
                self._fail('stmt.continuing', "continuing must be the last statement of a loop")
            if node.kind == NodeKind.BREAK_IF_STMT:
                self._fail('stmt.break_if', "break if must end a continuing block")
            self._fail('stmt.unexpected', f"unexpected {node.kind.value}")
        self._trace(f'checker.stmt.{node.kind.value}')
        handler(self, node)

    def _compound_stmt(self, node):
        self._block(node)

    def _initialized_type(self, declared: Optional[Ty], val: Optional[Val], what: str) -> Ty:
        if declared is None:
            if val is None:
                self._fail(f'{what}.untyped', "declaration needs a type or an initializer")
            ty = concretize(val.ty)
            if val.const:
                self._convert_const(val, ty)
            return ty
        if val is not None:
            if not can_convert(val.ty, declared):
                self._fail(f'{what}.mismatch', f"cannot initialize {declared} with {val.ty}")
            if val.const:
                self._convert_const(val, declared)
        return declared

    def _var_stmt(self, node):
        template, name, ty_node, init = _decl_parts(node)
        if template not in (None, ['function']):
            self._fail('var.address_space', f"function-scope variable {name} in {template[0]} space")
        declared = self.resolve_type(ty_node) if ty_node is not None else None
        val = self.value(init) if init is not None else None
        ty = self._initialized_type(declared, val, 'var')
        if not is_constructible(ty, self.structs):
            self._fail('var.type', f"variable {name} of type {ty}")
        self._declare(name, _Sym('var', Val(reference('function', ty))))

    def _let_stmt(self, node):
        _, name, ty_node, init = _decl_parts(node)
        declared = self.resolve_type(ty_node) if ty_node is not None else None
        val = self.value(init)
        if val.ty.cat == 'ptr':
            self._trace('checker.let.pointer')
            if declared is not None and declared != val.ty:
                self._fail('let.mismatch', f"cannot initialize {declared} with {val.ty}")
            ty = val.ty
        else:
            ty = self._initialized_type(declared, val, 'let')
            if not is_constructible(ty, self.structs):
                self._fail('let.type', f"let {name} of type {ty}")
        self._declare(name, _Sym('let', Val(ty)))

    def _const_decl(self, node):
        _, name, ty_node, init = _decl_parts(node)
        if any(_is_token(c, 'override') for c in node.children):
            self._fail('override.scope', "override declarations belong at module scope")
        if init is None:
            self._fail('const.no_initializer', f"constant {name} needs an initializer")
        declared = self.resolve_type(ty_node) if ty_node is not None else None
        self._declare(name, _Sym('const', self._typed_const(self.const_expr(init), declared)))

    def _assign_stmt(self, node):
        lhs, op, rhs = node.children[0], node.children[1].text, node.children[2]
        if lhs.kind == NodeKind.IDENTIFIER and lhs.text == '_':
            if op != '=':
                self._fail('assign.phony_compound', "compound assignment to '_'")
            val = self.value(rhs)
            if val.ty.cat != 'ptr' and not is_constructible(concretize(val.ty), self.structs):
                self._fail('assign.phony_type', f"cannot discard a value of type {val.ty}")
            self._trace('checker.assign.phony')
            return
        target = self.expr(lhs)
        if target.ty.cat != 'ref':
            self._fail('assign.not_reference', "left side of an assignment is not a variable")
        if target.ty.access == 'read':
            self._fail('assign.read_only', f"cannot write to {target.ty.space} memory")
        store = target.ty.elem
        val = self.value(rhs)
        if op != '=':
            self._trace('checker.assign.compound')
            val = self._binary_types(op[:-1], Val(store), val)
        if not can_convert(val.ty, store):
            self._fail('assign.mismatch', f"cannot assign {val.ty} to {store}")
        if val.const:
            self._convert_const(val, store)

    def _increment_stmt(self, node):
        target = self.expr(node.children[0])
        if target.ty.cat != 'ref':
            self._fail('increment.not_reference', "increment of something that is not a variable")
        if target.ty.access == 'read':
            self._fail('increment.read_only', f"cannot write to {target.ty.space} memory")
        if target.ty.elem not in (I32, U32):
            self._fail('increment.type', f"increment of {target.ty.elem}")

    def _call_stmt(self, node):
        self.call(node.children[0], statement=True)

    def _condition(self, node: AstNode, what: str):
        val = self.value(node)
        if val.ty != BOOL:
            self._fail(f'{what}.condition', f"{what} condition must be bool, not {val.ty}")

    def _if_stmt(self, node):
        parts = _operands(node)
        self._condition(parts[0], 'if')
        self._block(parts[1])
        if len(parts) > 2:
            target = _operands(parts[2])[0]
            if target.kind == NodeKind.IF_STMT:
                self._trace('checker.stmt.else_if')
                self._if_stmt(target)
            else:
                self._trace('checker.stmt.else')
                self._block(target)

    def _loop_body(self, body: AstNode, allow_continuing: bool = True):
        with self._nested():
            stmts = _operands(body)
            for i, stmt in enumerate(stmts):
                if stmt.kind != NodeKind.CONTINUING_STMT:
                    self.statement(stmt)
                elif not allow_continuing or i != len(stmts) - 1:
                    self._fail('loop.continuing', "misplaced continuing block")
                else:
                    self._continuing(stmt)

    def _continuing(self, stmt: AstNode):
        self._trace('checker.loop.continuing')
        saved = (self._continuing_direct, self._in_continuing, self._breakable)
        self._continuing_direct, self._in_continuing, self._breakable = True, True, 0
        try:
            with self._nested():
                inner = _operands(_operands(stmt)[0])
                for j, cont in enumerate(inner):
                    if cont.kind != NodeKind.BREAK_IF_STMT:
                        self.statement(cont)
                    elif j != len(inner) - 1:
                        self._fail('loop.break_if', "break if must end the continuing block")
                    else:
                        self._trace('checker.loop.break_if')
                        self._condition(_operands(cont)[0], 'break_if')
        finally:
            self._continuing_direct, self._in_continuing, self._breakable = saved

    def _loop_stmt(self, node):
        with self._in_loop():
            self._loop_body(_operands(node)[0])

    def _for_stmt(self, node):
        segments = [[], [], []]
        index = 0
        for child in _first(node, NodeKind.FOR_HEADER).children:
            if _is_token(child, ';'):
                index += 1
            elif child.kind != NodeKind.TOKEN:
                segments[index].append(child)
        init, condition, update = (seg[0] if seg else None for seg in segments)
        with self._nested():
            if init is not None:
                if init.kind not in FOR_INIT_KINDS:
                    self._fail('for.init', f"{init.kind.value} cannot initialize a for loop")
                self.statement(init)
            if condition is not None:
                self._condition(condition, 'for')
            with self._in_loop():
                self._loop_body(_first(node, NodeKind.COMPOUND_STMT), allow_continuing=False)
            if update is not None:
                if update.kind not in FOR_UPDATE_KINDS:
                    self._fail('for.update', f"{update.kind.value} cannot update a for loop")
                with self._nested():
                    self.statement(update)

    def _while_stmt(self, node):
        condition, body = _operands(node)
        self._condition(condition, 'while')
        with self._in_loop():
            self._loop_body(body, allow_continuing=False)

    def _switch_stmt(self, node):
        parts = _operands(node)
        selector = concretize(self.value(parts[0]).ty)
        if selector not in (I32, U32):
            self._fail('switch.selector', f"switch selector must be i32 or u32, not {selector}")
        seen, defaults = set(), 0
        self._breakable += 1
        try:
            for clause in parts[1:]:
                if any(_is_token(c, 'default') for c in clause.children):
                    defaults += 1
                    self._trace('checker.switch.default')
                body = None
                for child in _operands(clause):
                    if child.kind == NodeKind.COMPOUND_STMT:
                        body = child
                        continue
                    val = self.const_expr(child)
                    if val.ty.cat != 'scalar' or not kind_converts(val.ty.kind, selector.kind):
                        self._fail('switch.case_type', f"case value of type {val.ty} for a {selector} selector")
                    value = self._convert_const(val, selector).value
                    if value in seen:
                        self._fail('switch.duplicate_case', f"case {value} appears twice")
                    seen.add(value)
                    self._trace('checker.switch.case')
                self._block(body)
        finally:
            self._breakable -= 1
        if defaults != 1:
            self._fail('switch.default', "a switch needs exactly one default clause")

    def _break_stmt(self, node):
        if self._continuing_direct:
            self._fail('break.in_continuing', "use 'break if' to leave a loop from its continuing block")
        if self._breakable == 0:
            self._fail('break.outside', "break outside of a loop or switch")

    def _continue_stmt(self, node):
        if self._loops == 0:
            self._fail('continue.outside', "continue outside of a loop")
        if self._continuing_direct:
            self._fail('continue.in_continuing', "continue inside a continuing block")

    def _return_stmt(self, node):
        if self._in_continuing:
            self._fail('return.in_continuing', "return inside a continuing block")
        parts = _operands(node)
        result = self.signature.result
        if not parts:
            if result is not None:
                self._fail('return.missing_value', f"{self.function} must return a {result}")
            return
        if result is None:
            self._fail('return.void', f"{self.function} does not return a value")
        val = self.value(parts[0])
        if not can_convert(val.ty, result):
            self._fail('return.mismatch', f"cannot return {val.ty} from a function returning {result}")
        if val.const:
            self._convert_const(val, result)

    def _discard_stmt(self, node):
        if self.signature.stage in ('vertex', 'compute'):
            self._fail('discard.stage', f"discard in a {self.signature.stage} entry point")

    def _empty_stmt(self, node):
        pass

    _STATEMENTS = {
        NodeKind.COMPOUND_STMT: _compound_stmt,
        NodeKind.VAR_STMT: _var_stmt,
        NodeKind.LET_STMT: _let_stmt,
        NodeKind.CONST_DECL: _const_decl,
        NodeKind.ASSIGN_STMT: _assign_stmt,
        NodeKind.INCREMENT_STMT: _increment_stmt,
        NodeKind.CALL_STMT: _call_stmt,
        NodeKind.IF_STMT: _if_stmt,
        NodeKind.LOOP_STMT: _loop_stmt,
        NodeKind.FOR_STMT: _for_stmt,
        NodeKind.WHILE_STMT: _while_stmt,
        NodeKind.SWITCH_STMT: _switch_stmt,
        NodeKind.BREAK_STMT: _break_stmt,
        NodeKind.CONTINUE_STMT: _continue_stmt,
        NodeKind.RETURN_STMT: _return_stmt,
        NodeKind.DISCARD_STMT: _discard_stmt,
        NodeKind.EMPTY_STMT: _empty_stmt,
    }

    # ------------------------------------------------------------------
    # returns
    # ------------------------------------------------------------------

    def _returns(self, stmts: List[AstNode]) -> bool:
        return any(self._statement_returns(s) for s in stmts)

    def _statement_returns(self, node: AstNode) -> bool:
        kind = node.kind
        if kind == NodeKind.RETURN_STMT:
            return True
        if kind == NodeKind.COMPOUND_STMT:
            return self._returns(_operands(node))
        if kind == NodeKind.IF_STMT:
            parts = _operands(node)
            if len(parts) < 3:
                return False
            target = _operands(parts[2])[0]
            return self._returns(_operands(parts[1])) and self._statement_returns(target)
        if kind == NodeKind.SWITCH_STMT:
            bodies = [_first(c, NodeKind.COMPOUND_STMT) for c in _operands(node)[1:]]
            return all(self._returns(_operands(b)) for b in bodies)
        if kind == NodeKind.LOOP_STMT:
            # a loop nothing breaks out of never falls through
            self._trace('checker.return.loop')
            return not self._breaks_out(_operands(node)[0])
        return False

    @staticmethod
    def _breaks_out(body: AstNode) -> bool:
        stack = list(body.children)
        while stack:
            node = stack.pop()
            if node.kind in (NodeKind.BREAK_STMT, NodeKind.BREAK_IF_STMT):
                return True
            if node.kind in LOOP_KINDS or node.kind == NodeKind.SWITCH_STMT:
                continue
            stack.extend(node.children)
        return False

    # ==================================================================
    # expressions
    # ==================================================================

    def value(self, node: AstNode) -> Val:
        """Type of `node` with references loaded."""
        val = self.expr(node)
        if val.ty.cat == 'ref':
            self._trace('checker.expr.load')
            return Val(val.ty.elem)
        return val

    def expr(self, node: AstNode) -> Val:
        handler = self._EXPRESSIONS.get(node.kind)
        if handler is None:
            self._fail('expr.unexpected', f"unexpected {node.kind.value} in an expression")
        return handler(self, node)

    def _literal(self, node: AstNode) -> Val:
        text = node.text
        if text in ('true', 'false'):
            self._trace('checker.literal.bool')
            return Val(BOOL, True, text == 'true')
        try:
            value, kind = number_value(text)
        except ValueError as e:
            return self._fail('literal.malformed', str(e))
        if kind == 'f16':
            self._fail('literal.f16', "f16 literals require 'enable f16'")
        if not fits(value, kind):
            self._fail('literal.range', f"literal {text} does not fit {kind}")
        self._trace(f'checker.literal.{kind}')
        return Val(scalar(kind), True, value)

    def _paren(self, node: AstNode) -> Val:
        return self.expr(_operands(node)[0])

    def _type_expr(self, node: AstNode) -> Val:
        name = _plain_name(node)
        if name is None:
            self._fail('expr.type_as_value', "a type is not a value")
        return self._identifier_named(name)

    def _identifier(self, node: AstNode) -> Val:
        return self._identifier_named(node.text)

    def _identifier_named(self, name: str) -> Val:
        sym = self.scope.get(name)
        if sym is None:
            sym = self.module.get(name)
        if sym is None:
            if name in PREDECLARED:
                self._fail('ident.not_a_value', f"'{name}' is not a value")
            self._fail('ident.unknown', f"unknown identifier '{name}'")
        kind = sym.kind
        self._trace(f'checker.ident.{kind}')
        if kind in ('const', 'override') and sym.val is None:
            return self._module_const(name)
        if kind == 'global':
            val = self._global(name)
            if self.function is not None:
                self.global_uses[self.function].add(name)
            return val
        if kind in ('function', 'struct'):
            self._fail('ident.not_a_value', f"'{name}' is not a value")
        return sym.val

    def _unary(self, node: AstNode) -> Val:
        op, operand = node.children[0].text, node.children[1]
        if op == '&':
            val = self.expr(operand)
            if val.ty.cat != 'ref':
                self._fail('unary.address_of_value', "cannot take the address of a value")
            if val.component:
                self._fail('unary.address_of_component', "cannot take the address of a vector component")
            self._trace('checker.unary.address_of')
            return Val(pointer(val.ty.space, val.ty.elem, val.ty.access))
        if op == '*':
            val = self.value(operand)
            if val.ty.cat != 'ptr':
                self._fail('unary.deref', f"cannot dereference {val.ty}")
            self._trace('checker.unary.deref')
            return Val(reference(val.ty.space, val.ty.elem, val.ty.access))
        val = self.value(operand)
        ty = val.ty
        if ty.cat not in ('scalar', 'vector'):
            self._fail('unary.operand', f"'{op}' on {ty}")
        value = val.value
        if op == '-':
            if ty.kind not in SIGNED_KINDS:
                self._fail('unary.negate', f"cannot negate {ty}")
            value = self._checked(-value, ty.kind) if value is not None else None
        elif op == '!':
            if ty.kind != 'bool':
                self._fail('unary.not', f"'!' on {ty}")
            value = (not value) if value is not None else None
        elif op == '~':
            if ty.kind not in INT_KINDS:
                self._fail('unary.complement', f"'~' on {ty}")
            if value is not None:
                value = ~value & 0xFFFFFFFF if ty.kind == 'u32' else ~value
        else:
            self._fail('unary.unknown', f"unknown unary operator '{op}'")
        self._trace(f'checker.unary.{op}')
        return Val(ty, val.const, value)

    def _binary(self, node: AstNode) -> Val:
        left, op, right = node.children[0], node.children[1].text, node.children[2]
        if op in ('&&', '||'):
            a, b = self.value(left), self.value(right)
            if a.ty != BOOL or b.ty != BOOL:
                self._fail('binary.logical', f"'{op}' needs bool operands, not {a.ty} and {b.ty}")
            value = None
            if a.value is not None and b.value is not None:
                value = (a.value and b.value) if op == '&&' else (a.value or b.value)
            self._trace('checker.binary.logical')
            return Val(BOOL, a.const and b.const, value)
        return self._binary_types(op, self.value(left), self.value(right))

    def _binary_types(self, op: str, a: Val, b: Val) -> Val:
        ta, tb = a.ty, b.ty
        if ta.cat not in ('scalar', 'vector', 'matrix') or tb.cat not in ('scalar', 'vector', 'matrix'):
            self._fail('binary.operand', f"'{op}' on {ta} and {tb}")
        if op in ('<<', '>>'):
            return self._shift(op, a, b)
        kind = common_kind([ta.kind, tb.kind])
        if kind is None:
            self._fail('binary.kind_mismatch', f"'{op}' on {ta} and {tb}")
        ta, tb = with_kind(ta, kind), with_kind(tb, kind)
        const = a.const and b.const
        x = self._convert_const(a, scalar(kind)).value if a.value is not None else None
        y = self._convert_const(b, scalar(kind)).value if b.value is not None else None
        known = x is not None and y is not None
        if op in COMPARISONS:
            if ta != tb or ta.cat == 'matrix':
                self._fail('binary.compare_shape', f"cannot compare {ta} with {tb}")
            if kind == 'bool' and op not in ('==', '!='):
                self._fail('binary.compare_bool', f"'{op}' on bool")
            self._trace('checker.binary.compare')
            result = BOOL if ta.cat == 'scalar' else vector(ta.n, 'bool')
            return Val(result, const, self._compare(op, x, y) if known else None)
        if op in BITWISE:
            if ta != tb or ta.cat == 'matrix':
                self._fail('binary.bitwise_shape', f"'{op}' on {ta} and {tb}")
            if kind == 'bool' and op == '^':
                self._fail('binary.bitwise_bool', "'^' on bool")
            if kind not in INT_KINDS and kind != 'bool':
                self._fail('binary.bitwise_kind', f"'{op}' on {ta}")
            self._trace(f'checker.binary.bitwise.{kind}')
            value = None
            if known:
                value = {'&': x & y, '|': x | y, '^': x ^ y}[op]
                value = bool(value) if kind == 'bool' else value
            return Val(ta, const, value)
        if op not in ARITHMETIC:
            self._fail('binary.unknown', f"unknown operator '{op}'")
        if kind == 'bool':
            self._fail('binary.arith_bool', f"'{op}' on bool")
        if ta.cat == 'matrix' or tb.cat == 'matrix':
            return Val(self._matrix_arith(op, ta, tb, kind), const)
        if ta.cat == tb.cat:
            if ta != tb:
                self._fail('binary.arith_shape', f"'{op}' on {ta} and {tb}")
            result = ta
        else:
            self._trace('checker.binary.mixed')
            result = ta if ta.cat == 'vector' else tb
        self._trace(f'checker.binary.arith.{kind}')
        return Val(result, const, self._arith(op, x, y, kind) if known else None)

    def _matrix_arith(self, op: str, ta: Ty, tb: Ty, kind: str) -> Ty:
        if kind not in FLOAT_KINDS:
            self._fail('binary.matrix_kind', f"'{op}' on {ta} and {tb}")
        if op in ('+', '-'):
            if ta != tb:
                self._fail('binary.matrix_shape', f"'{op}' on {ta} and {tb}")
            return ta
        if op != '*':
            self._fail('binary.matrix_op', f"'{op}' on a matrix")
        self._trace('checker.binary.matrix')
        if ta.cat == 'matrix' and tb.cat == 'matrix':
            if ta.n != tb.m:
                self._fail('binary.matrix_dims', f"cannot multiply {ta} by {tb}")
            return matrix(tb.n, ta.m, kind)
        if ta.cat == 'matrix' and tb.cat == 'vector':
            if tb.n != ta.n:
                self._fail('binary.matrix_dims', f"cannot multiply {ta} by {tb}")
            return vector(ta.m, kind)
        if ta.cat == 'vector' and tb.cat == 'matrix':
            if ta.n != tb.m:
                self._fail('binary.matrix_dims', f"cannot multiply {ta} by {tb}")
            return vector(tb.n, kind)
        return ta if ta.cat == 'matrix' else tb

    def _shift(self, op: str, a: Val, b: Val) -> Val:
        ta, tb = a.ty, b.ty
        if ta.cat == 'matrix' or ta.kind not in INT_KINDS:
            self._fail('shift.lhs', f"cannot shift {ta}")
        if tb.cat != ta.cat or tb.n != ta.n or not kind_converts(tb.kind, 'u32'):
            self._fail('shift.rhs', f"shift amount of type {tb} for {ta}")
        amount = self._convert_const(b, scalar('u32')).value if b.value is not None else None
        limit = 64 if ta.kind == 'aint' else 32
        if amount is not None and amount >= limit:
            self._fail('shift.amount', f"shift by {amount} is too large for {ta.kind}")
        value = None
        if amount is not None and a.value is not None:
            value = a.value << amount if op == '<<' else a.value >> amount
            value = self._checked(value, ta.kind)
        self._trace(f'checker.shift.{ta.kind}')
        return Val(ta, a.const and b.const, value)

    # ------------------------------------------------------------------
    # constant folding
    # ------------------------------------------------------------------

    def _checked(self, value, kind: str):
        if not fits(value, kind):
            self._fail('const.overflow', f"constant expression overflows {kind}")
        return value

    def _arith(self, op: str, x, y, kind: str):
        if op in ('/', '%') and y == 0:
            self._fail('const.division_by_zero', "constant division by zero")
        if kind in INT_KINDS:
            if op == '/':
                value = _trunc_div(x, y)
            elif op == '%':
                value = x - y * _trunc_div(x, y)
            else:
                value = {'+': x + y, '-': x - y, '*': x * y}[op]
        elif op == '%':
            value = math.fmod(x, y)
        else:
            try:
                value = {'+': lambda: x + y, '-': lambda: x - y, '*': lambda: x * y, '/': lambda: x / y}[op]()
            except OverflowError:
                value = math.inf
        return self._checked(value, kind)

    @staticmethod
    def _compare(op: str, x, y) -> bool:
        return {'==': x == y, '!=': x != y, '<': x < y, '<=': x <= y, '>': x > y, '>=': x >= y}[op]

    def _convert_const(self, val: Val, ty: Ty) -> Val:
        """`val` converted to `ty`; constant scalars are range checked."""
        if val.value is None or ty.cat != 'scalar' or val.ty.cat != 'scalar':
            return Val(ty, val.const)
        value = val.value
        if ty.kind in FLOAT_KINDS and not isinstance(value, bool):
            value = float(value)
        if not fits(value, ty.kind):
            self._fail('const.range', f"{val.value} does not fit {ty}")
        return Val(ty, val.const, value)

    def _fold_conversion(self, val: Val, kind: str):
        """Value of the explicit conversion `kind(val)` when it is known."""
        value = val.value
        if value is None:
            return None
        if kind == 'bool':
            return bool(value)
        if kind == 'f32':
            return self._checked(float(value), 'f32')
        if isinstance(value, bool):
            return int(value)
        if isinstance(value, float):
            low, high = KIND_RANGES[kind]
            return max(low, min(high, int(value)))
        if val.ty.kind == 'aint':
            return self._checked(value, kind)
        bits = value & 0xFFFFFFFF
        return bits - (1 << 32) if kind == 'i32' and bits >= (1 << 31) else bits

    # ------------------------------------------------------------------
    # access
    # ------------------------------------------------------------------

    def _member(self, node: AstNode) -> Val:
        base = self.expr(node.children[0])
        field = node.children[-1].text
        ty = base.ty
        if ty.cat == 'ptr':
            self._trace('checker.member.through_pointer')
            ty = reference(ty.space, ty.elem, ty.access)
        is_ref = ty.cat == 'ref'
        inner = ty.elem if is_ref else ty
        if inner.cat == 'struct':
            members = dict(self.structs[inner.name])
            if field not in members:
                self._fail('member.unknown', f"{inner.name} has no member '{field}'")
            self._trace('checker.member.struct')
            if is_ref:
                return Val(reference(ty.space, members[field], ty.access))
            return Val(members[field], base.const)
        if inner.cat == 'vector':
            letters = next((s for s in SWIZZLE_SETS if all(c in s for c in field)), None)
            if letters is None or not 1 <= len(field) <= 4:
                self._fail('member.swizzle', f"invalid swizzle .{field}")
            if max(letters.index(c) for c in field) >= inner.n:
                self._fail('member.swizzle_range', f"swizzle .{field} on {inner}")
            if len(field) == 1:
                self._trace('checker.member.component')
                if is_ref:
                    return Val(reference(ty.space, scalar(inner.kind), ty.access), component=True)
                return Val(scalar(inner.kind), base.const)
            self._trace('checker.member.swizzle')
            return Val(vector(len(field), inner.kind), base.const and not is_ref)
        self._fail('member.non_composite', f"member access .{field} on {inner}")

    def _index(self, node: AstNode) -> Val:
        base = self.expr(node.children[0])
        index = self.value(node.children[2])
        if index.ty.cat != 'scalar' or index.ty.kind not in INT_KINDS:
            self._fail('index.type', f"index of type {index.ty}")
        if index.value is not None and index.value < 0:
            self._fail('index.negative', f"negative index {index.value}")
        ty = base.ty
        if ty.cat == 'ptr':
            self._trace('checker.index.through_pointer')
            ty = reference(ty.space, ty.elem, ty.access)
        is_ref = ty.cat == 'ref'
        inner = ty.elem if is_ref else ty
        if inner.cat == 'array':
            elem, bound, component = inner.elem, inner.n, False
        elif inner.cat == 'vector':
            elem, bound, component = scalar(inner.kind), inner.n, True
        elif inner.cat == 'matrix':
            elem, bound, component = vector(inner.m, inner.kind), inner.n, False
        else:
            return self._fail('index.non_indexable', f"cannot index {inner}")
        if bound and index.value is not None and index.value >= bound:
            self._fail('index.out_of_bounds', f"index {index.value} out of bounds for {inner}")
        self._trace(f'checker.index.{inner.cat}' + ('' if index.const else '.dynamic'))
        if is_ref:
            return Val(reference(ty.space, elem, ty.access), component=component)
        return Val(elem, base.const and index.const)

    # ------------------------------------------------------------------
    # calls and constructors
    # ------------------------------------------------------------------

    def _call_expr(self, node: AstNode) -> Val:
        return self.call(node)

    def call(self, node: AstNode, statement: bool = False) -> Optional[Val]:
        callee, arg_list = node.children[0], node.children[-1]
        args = _operands(arg_list)
        if callee.kind == NodeKind.TYPE_EXPR and len(callee.children) > 1:
            if statement:
                self._fail('call.unused_value', "a constructor cannot be a statement")
            return self._construct(self.resolve_type(callee), [self.value(a) for a in args])
        name = _plain_name(callee)
        if name in self.scope:
            self._fail('call.not_callable', f"'{name}' is not a function")
        sym = self.module.get(name)
        if sym is not None:
            if sym.kind == 'function':
                return self._call_function(name, args, statement)
            if sym.kind != 'struct':
                self._fail('call.not_callable', f"'{name}' is not a function")
        elif name not in PREDECLARED:
            self._fail('call.unknown', f"unknown function '{name}'")
        if statement:
            self._fail('call.unused_value', f"the value of '{name}(...)' must be used")
        if sym is not None:
            return self._construct(self._named_type(name), [self.value(a) for a in args])
        if name in SCALAR_KINDS or name in TYPE_ALIASES or name == 'f16':
            return self._construct(self._named_type(name), [self.value(a) for a in args])
        if name in VECTOR_SIZES or name in MATRIX_SHAPES or name == 'array':
            return self._construct_inferred(name, [self.value(a) for a in args])
        if name in POINTER_BUILTINS:
            return self._array_length(args)
        if name in BUILTINS:
            return self._builtin(name, [self.value(a) for a in args])
        self._fail('call.not_callable', f"'{name}' is not a function")

    def _call_function(self, name: str, args: List[AstNode], statement: bool) -> Optional[Val]:
        if self.function is None:
            self._fail('call.module_scope', f"call of {name} in a constant expression")
        sig = self.signatures[name]
        if sig.stage is not None:
            self._fail('call.entry_point', f"entry point {name} cannot be called")
        if len(args) != len(sig.params):
            self._fail('call.arity', f"{name} takes {len(sig.params)} arguments, not {len(args)}")
        for arg, (_, param_ty) in zip(args, sig.params):
            val = self.value(arg)
            if param_ty.cat == 'ptr':
                if val.ty != param_ty:
                    self._fail('call.pointer_arg', f"cannot pass {val.ty} as {param_ty}")
            elif not can_convert(val.ty, param_ty):
                self._fail('call.arg_type', f"cannot pass {val.ty} as {param_ty}")
            elif val.const:
                self._convert_const(val, param_ty)
        self.calls[self.function].add(name)
        self._trace('checker.call.function')
        if sig.result is None:
            if not statement:
                self._fail('call.void_value', f"{name} does not return a value")
            return None
        if statement and sig.must_use:
            self._fail('call.must_use', f"the result of {name} must be used")
        return Val(sig.result)

    def _construct(self, ty: Ty, vals: List[Val]) -> Val:
        const = all(v.const for v in vals)
        if not vals:
            if not is_constructible(ty, self.structs):
                self._fail('construct.type', f"{ty} has no zero value")
            self._trace(f'checker.construct.zero.{ty.cat}')
            zero = None
            if ty.cat == 'scalar':
                zero = {'bool': False, 'f32': 0.0}.get(ty.kind, 0)
            return Val(ty, True, zero)
        self._trace(f'checker.construct.{ty.cat}')
        if ty.cat == 'scalar':
            if len(vals) != 1 or vals[0].ty.cat != 'scalar':
                self._fail('construct.scalar', f"{ty} takes one scalar")
            return Val(ty, const, self._fold_conversion(vals[0], ty.kind))
        if ty.cat == 'vector':
            if len(vals) == 1 and vals[0].ty.cat == 'vector':
                if vals[0].ty.n != ty.n:
                    self._fail('construct.vector_size', f"cannot convert {vals[0].ty} to {ty}")
                return Val(ty, const)
            self._components(ty, vals, ty.n, allow_splat=True)
            return Val(ty, const)
        if ty.cat == 'matrix':
            if len(vals) == 1 and vals[0].ty.cat == 'matrix':
                if (vals[0].ty.n, vals[0].ty.m) != (ty.n, ty.m):
                    self._fail('construct.matrix_shape', f"cannot convert {vals[0].ty} to {ty}")
                return Val(ty, const)
            if all(v.ty.cat == 'vector' for v in vals):
                if len(vals) != ty.n or any(v.ty.n != ty.m or not kind_converts(v.ty.kind, ty.kind)
                                            for v in vals):
                    self._fail('construct.matrix_columns', f"bad columns for {ty}")
                return Val(ty, const)
            self._components(ty, vals, ty.n * ty.m, allow_splat=False)
            return Val(ty, const)
        if ty.cat == 'array':
            if ty.n == 0:
                self._fail('construct.runtime_array', "runtime-sized arrays cannot be constructed")
            if len(vals) != ty.n:
                self._fail('construct.array_count', f"{ty} needs {ty.n} elements, not {len(vals)}")
            for v in vals:
                self._convert_arg(v, ty.elem, 'construct.array_element')
            return Val(ty, const)
        if ty.cat == 'struct':
            members = self.structs[ty.name]
            if not is_constructible(ty, self.structs):
                self._fail('construct.type', f"{ty} cannot be constructed")
            if len(vals) != len(members):
                self._fail('construct.struct_count', f"{ty.name} has {len(members)} members")
            for v, (_, member_ty) in zip(vals, members):
                self._convert_arg(v, member_ty, 'construct.struct_member')
            return Val(ty, const)
        self._fail('construct.type', f"{ty} cannot be constructed")

    def _convert_arg(self, val: Val, ty: Ty, tag: str):
        if not can_convert(val.ty, ty):
            self._fail(tag, f"cannot convert {val.ty} to {ty}")
        if val.const:
            self._convert_const(val, ty)

    def _components(self, ty: Ty, vals: List[Val], count: int, allow_splat: bool):
        target = scalar(ty.kind)
        total = 0
        for v in vals:
            if v.ty.cat not in ('scalar', 'vector') or not kind_converts(v.ty.kind, ty.kind):
                self._fail('construct.component', f"cannot build {ty} from {v.ty}")
            if v.const and v.ty.cat == 'scalar':
                self._convert_const(v, target)
            total += component_count(v.ty)
        if allow_splat and len(vals) == 1 and vals[0].ty.cat == 'scalar':
            self._trace('checker.construct.splat')
            return
        if total != count:
            self._fail('construct.component_count', f"{ty} needs {count} components, not {total}")

    def _construct_inferred(self, name: str, vals: List[Val]) -> Val:
        if not vals:
            self._fail('construct.inferred_empty', f"{name}() needs template arguments")
        self._trace(f'checker.construct.inferred.{name}')
        kinds = [element_kind(v.ty) for v in vals]
        if name == 'array':
            first = vals[0].ty
            if None in kinds:
                elem = first
            else:
                kind = common_kind(kinds)
                if kind is None:
                    self._fail('construct.array_element', "array elements of different types")
                elem = with_kind(first, kind)
            for v in vals:
                self._convert_arg(v, elem, 'construct.array_element')
            return Val(array(elem, len(vals)), all(v.const for v in vals))
        if any(v.ty.cat not in ('scalar', 'vector', 'matrix') for v in vals):
            self._fail('construct.component', f"cannot build {name} from {vals[0].ty}")
        kind = common_kind(kinds)
        if kind is None:
            self._fail('construct.component', f"{name} components of different kinds")
        if name in VECTOR_SIZES:
            return self._construct(vector(VECTOR_SIZES[name], kind), vals)
        if kind == 'aint':
            kind = 'afloat'
        if kind not in FLOAT_KINDS:
            self._fail('construct.matrix_kind', f"{name} of {kind}")
        return self._construct(matrix(*MATRIX_SHAPES[name], kind), vals)

    def _array_length(self, args: List[AstNode]) -> Val:
        if len(args) != 1:
            self._fail('builtin.arity', "arrayLength takes one argument")
        ty = self.value(args[0]).ty
        if ty.cat != 'ptr' or ty.elem.cat != 'array' or ty.elem.n != 0:
            self._fail('builtin.array_length', f"arrayLength of {ty}")
        self._trace('checker.builtin.arrayLength')
        return Val(U32)

    def _builtin(self, name: str, vals: List[Val]) -> Val:
        if any(to_shape(v.ty) is None for v in vals):
            self._fail('builtin.arg_type', f"{name} does not take {', '.join(str(v.ty) for v in vals)}")
        unified = vals[:2] if name == 'select' else vals
        kind = common_kind([v.ty.kind for v in unified]) if unified else None
        if unified and kind is None:
            self._fail('builtin.kind_mismatch', f"{name} arguments of different kinds")
        rest = [to_shape(v.ty) for v in vals[len(unified):]]
        result = builtin_result(name, [to_shape(with_kind(v.ty, kind)) for v in unified] + rest)
        if result is None and kind == 'aint':
            # abstract integers also convert to abstract floats
            self._trace('checker.builtin.afloat')
            result = builtin_result(name, [to_shape(with_kind(v.ty, 'afloat')) for v in unified] + rest)
        if result is None:
            self._fail('builtin.no_overload',
                       f"no overload of {name} for ({', '.join(str(v.ty) for v in vals)})")
        self._trace(f'checker.builtin.{name}')
        return Val(from_shape(result), all(v.const for v in vals))

    _EXPRESSIONS = {
        NodeKind.LITERAL: _literal,
        NodeKind.PAREN_EXPR: _paren,
        NodeKind.IDENTIFIER: _identifier,
        NodeKind.TYPE_EXPR: _type_expr,
        NodeKind.UNARY_EXPR: _unary,
        NodeKind.BINARY_EXPR: _binary,
        NodeKind.CALL_EXPR: _call_expr,
        NodeKind.MEMBER_EXPR: _member,
        NodeKind.INDEX_EXPR: _index,
    }
