"""
Raising: WGSL syntax tree to IrModule.

Only programs inside the IR's inventory can be raised. Anything else
(uniform or workgroup variables, textures, global initializers, overrides,
discard, recursion, pointer parameters, f16) raises ``RaiseError`` and the
program stays an AST-only sample.

Translation notes:

* ``for`` and ``while`` become a ``Loop`` whose body starts with
  ``if cond {} else { break; }``; a ``for`` update goes to the continuing
  block.
* Abstract numeric literals take their kind from the surrounding
  expression (the other operand, the declared type, the parameter type)
  and default to i32 / f32.
* Calls inside expressions become a ``Call`` statement placed before the
  statement that uses the result; ``&&`` and ``||`` evaluate both sides.
* Names of module-level declarations, parameters and variables are kept,
  except where they would collide with the names the lifter introduces
  (``_e<n>`` / ``_c<n>``) or with each other once all variables share the
  function scope.
"""

import re
import sys
from collections import ChainMap
from contextlib import contextmanager
from typing import Dict, List, NamedTuple, Optional, Tuple

from config.config import PARSER_RECURSION_LIMIT
from ir.audit import check_module
from ir.builtins import BUILTINS, POINTER_BUILTINS
from ir.lift import BINARY_SYMBOLS
from ir.module import (
    IrModule, Function, FunctionParam, FunctionResult, LocalVar, GlobalVar,
    IrTypeError, IrValidationError, ALWAYS_VISIBLE,
    FunctionArgument, LocalVariable, GlobalVariable, Literal, Compose, AccessIndex, Access,
    Unary, Binary, CallResult, BuiltinCall, Load,
    Emit, Store, Call, If, Loop, Break, Continue, Return, Switch, SwitchCase,
    ARITHMETIC_OPS, BITWISE_OPS, SHIFT_OPS, LOGICAL_OPS,
)
from ir.types import (
    IrType, Scalar, Vector, Matrix, Array, Struct, StructMember, Binding,
    SCALAR_KINDS, NUMERIC_KINDS, F32, scalar_of,
)
from ir.typing import add_typed, zero_value
from syntax.lexer import number_value
from syntax.nodes import AstNode, AstTree, NodeKind, iter_nodes


class RaiseError(Exception):
    """A syntax tree the IR cannot represent."""


# ============================================================================
# Tables
# ============================================================================

BINARY_OPS_BY_SYMBOL = {symbol: op for op, symbol in BINARY_SYMBOLS.items()}
UNARY_OPS_BY_SYMBOL = {'-': 'neg', '!': 'not', '~': 'bitnot'}
ABSTRACT_BINARY_SYMBOLS = frozenset({'+', '-', '*', '/', '%', '&', '|', '^', '<<', '>>'})

VECTOR_SIZES = {'vec2': 2, 'vec3': 3, 'vec4': 4}
MATRIX_SHAPES = {f"mat{c}x{r}": (c, r) for c in (2, 3, 4) for r in (2, 3, 4)}

TYPE_ALIASES = {f"vec{n}{s}": Vector(n, Scalar(kind))
                for n in (2, 3, 4) for s, kind in (('i', 'i32'), ('u', 'u32'), ('f', 'f32'))}
TYPE_ALIASES.update({f"{name}f": Matrix(c, r) for name, (c, r) in MATRIX_SHAPES.items()})

SWIZZLE_SETS = ('xyzw', 'rgba')

# names the lifter uses for its own bindings
RESERVED_NAME = re.compile(r'_[ce]\d+')


class _Entry(NamedTuple):
    kind: str  # value | ref | pointer | global | const
    handle: int = -1
    node: Optional[AstNode] = None
    type_node: Optional[AstNode] = None
    scope: Optional[ChainMap] = None


# ============================================================================
# Tree helpers
# ============================================================================

def _is_token(node: AstNode, text: str) -> bool:
    return node.kind == NodeKind.TOKEN and node.text == text


def _operands(node: AstNode) -> List[AstNode]:
    """Children that are not punctuation or keywords."""
    return [c for c in node.children if c.kind != NodeKind.TOKEN]


def _first(node: AstNode, kind: NodeKind) -> Optional[AstNode]:
    return next((c for c in node.children if c.kind == kind), None)


def _name_of(node: AstNode) -> str:
    ident = _first(node, NodeKind.IDENTIFIER)
    if ident is None:
        raise RaiseError(f"{node.kind.value} without a name")
    return ident.text


def _attributes(children) -> List[Tuple[str, List[AstNode]]]:
    attrs = []
    for child in children:
        if child.kind != NodeKind.ATTRIBUTE:
            continue
        name = child.children[1].text if len(child.children) > 1 else ''
        args_node = _first(child, NodeKind.ARG_LIST)
        args = _operands(args_node) if args_node is not None else []
        if any(name == seen for seen, _ in attrs):
            raise RaiseError(f"duplicate attribute @{name}")
        attrs.append((name, args))
    return attrs


def _decl_parts(node: AstNode):
    """(template identifiers, name, type node, initializer node) of a declaration."""
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
    if name is None:
        raise RaiseError(f"{node.kind.value} without a name")
    return template, name, ty, init


def _number(text: str):
    try:
        return number_value(text)
    except ValueError as e:
        raise RaiseError(str(e)) from e


def _fresh(name: str, taken: set) -> str:
    candidate, k = name, 0
    while candidate in taken or RESERVED_NAME.fullmatch(candidate):
        k += 1
        candidate = f"{name}_{k}"
    taken.add(candidate)
    return candidate


def _scalar_kind(ty) -> Optional[str]:
    if isinstance(ty, Matrix):
        return ty.element.kind
    scalar = scalar_of(ty)
    return scalar.kind if scalar is not None else None


def _has_float_literal(node: AstNode) -> bool:
    for n in iter_nodes(node):
        if n.kind == NodeKind.LITERAL and n.text not in ('true', 'false'):
            if _number(n.text)[1] in ('afloat', 'f32'):
                return True
    return False


# ============================================================================
# Module level
# ============================================================================

class _ModuleRaiser:

    def __init__(self, root: AstNode):
        self.root = root
        self.module = IrModule()
        for kind in SCALAR_KINDS:
            self.module.intern(Scalar(kind))
        self.struct_nodes: Dict[str, AstNode] = {}
        self.struct_types: Dict[str, int] = {}
        self._resolving = set()
        self.function_nodes: Dict[str, AstNode] = {}
        self.function_index: Dict[str, int] = {}
        self.consts: Dict[str, _Entry] = {}
        self.module_scope: Dict[str, _Entry] = {}
        self.ir_names: Dict[str, str] = {}
        self.taken: set = set()

    def run(self) -> IrModule:
        globals_ = []
        for decl in self.root.children:
            if decl.kind == NodeKind.EMPTY_STMT:
                continue
            if decl.kind == NodeKind.STRUCT_DECL:
                self.struct_nodes[self._declare(_name_of(decl))] = decl
            elif decl.kind == NodeKind.FUNCTION_DECL:
                self.function_nodes[self._declare(_name_of(decl))] = decl
            elif decl.kind == NodeKind.GLOBAL_VAR_DECL:
                globals_.append(decl)
                self._declare(_decl_parts(decl)[1])
            elif decl.kind == NodeKind.CONST_DECL:
                if any(_is_token(c, 'override') for c in decl.children):
                    raise RaiseError("override declarations are not supported")
                if _attributes(decl.children):
                    raise RaiseError("attributes on a constant")
                _, name, ty, init = _decl_parts(decl)
                if init is None:
                    raise RaiseError(f"constant {name} without initializer")
                entry = _Entry('const', node=init, type_node=ty)
                self.consts[self._declare(name)] = entry
                self.module_scope[name] = entry
            else:
                raise RaiseError(f"unsupported declaration {decl.kind.value}")

        self.taken = {n for n in self.ir_names if not RESERVED_NAME.fullmatch(n)}
        for name in self.ir_names:
            self.ir_names[name] = name if name in self.taken else _fresh(name, self.taken)

        for name in self.struct_nodes:
            self.struct_handle(name)
        for decl in globals_:
            self._global(decl)
        for name in self._call_order():
            function = _FunctionRaiser(self, self.function_nodes[name], self.ir_names[name]).run()
            self.function_index[name] = len(self.module.functions)
            self.module.functions.append(function)

        try:
            return check_module(self.module)
        except IrValidationError as e:
            raise RaiseError(f"raised module is not well-formed: {e}") from e

    def _declare(self, name: str) -> str:
        if name in self.ir_names:
            raise RaiseError(f"'{name}' declared twice")
        self.ir_names[name] = name
        return name

    # ------------------------------------------------------------------
    # types
    # ------------------------------------------------------------------

    def struct_handle(self, name: str) -> int:
        if name in self.struct_types:
            return self.struct_types[name]
        if name in self._resolving:
            raise RaiseError(f"struct {name} contains itself")
        self._resolving.add(name)
        decl = self.struct_nodes[name]
        if _attributes(decl.children):
            raise RaiseError(f"attributes on struct {name}")
        members = []
        for member in decl.children:
            if member.kind != NodeKind.STRUCT_MEMBER:
                continue
            member_name = _name_of(member)
            if any(m.name == member_name for m in members):
                raise RaiseError(f"struct {name} has two members named {member_name}")
            binding = self.binding(_attributes(member.children), f"member {member_name}")
            ty_node = _first(member, NodeKind.TYPE_EXPR)
            if ty_node is None:
                raise RaiseError(f"member {member_name} without a type")
            members.append(StructMember(member_name, self.type_handle(ty_node), binding))
        if not members:
            raise RaiseError(f"struct {name} has no members")
        self._resolving.discard(name)
        handle = self.module.intern(Struct(self.ir_names[name], tuple(members)))
        self.struct_types[name] = handle
        return handle

    def type_of(self, node: AstNode) -> IrType:
        if node.kind != NodeKind.TYPE_EXPR:
            raise RaiseError(f"expected a type, found {node.kind.value}")
        name = node.children[0].text
        args = _operands(node)[1:]
        if not args:
            if name in SCALAR_KINDS:
                return Scalar(name)
            if name in TYPE_ALIASES:
                return TYPE_ALIASES[name]
            if name in self.struct_nodes:
                return self.module.types[self.struct_handle(name)]
        elif name in VECTOR_SIZES and len(args) == 1:
            element = self.type_of(args[0])
            if isinstance(element, Scalar):
                return Vector(VECTOR_SIZES[name], element)
        elif name in MATRIX_SHAPES and len(args) == 1:
            if self.type_of(args[0]) == F32:
                return Matrix(*MATRIX_SHAPES[name])
        elif name == 'array' and len(args) in (1, 2):
            element = self.type_handle(args[0])
            length = self.const_int(args[1]) if len(args) == 2 else None
            if length is not None and length <= 0:
                raise RaiseError(f"array length {length}")
            return Array(element, length)
        raise RaiseError(f"unsupported type '{name}'")

    def type_handle(self, node: AstNode) -> int:
        return self.module.intern(self.type_of(node))

    def const_int(self, node: AstNode, expanding=frozenset()) -> int:
        """Value of a constant integer expression over literals and module constants."""
        kind = node.kind
        if kind == NodeKind.LITERAL and node.text not in ('true', 'false'):
            value, literal_kind = _number(node.text)
            if literal_kind in ('aint', 'i32', 'u32'):
                return value
        elif kind == NodeKind.PAREN_EXPR:
            return self.const_int(_operands(node)[0], expanding)
        elif kind == NodeKind.UNARY_EXPR and node.children[0].text == '-' and len(node.children) == 2:
            return -self.const_int(node.children[1], expanding)
        elif kind == NodeKind.BINARY_EXPR and node.children[1].text in ('+', '-', '*'):
            left = self.const_int(node.children[0], expanding)
            right = self.const_int(node.children[2], expanding)
            return {'+': left + right, '-': left - right, '*': left * right}[node.children[1].text]
        elif kind in (NodeKind.IDENTIFIER, NodeKind.TYPE_EXPR):
            name = node.text if kind == NodeKind.IDENTIFIER else node.children[0].text
            if len(node.children) <= 1 and name in self.consts and name not in expanding:
                return self.const_int(self.consts[name].node, expanding | {name})
        raise RaiseError("expected a constant integer expression")

    def binding(self, attrs, where: str) -> Optional[Binding]:
        binding = None
        for name, args in attrs:
            if binding is not None:
                raise RaiseError(f"{where} has two IO bindings")
            if name == 'builtin' and len(args) == 1 and args[0].kind == NodeKind.IDENTIFIER:
                binding = Binding(builtin=args[0].text)
            elif name == 'location' and len(args) == 1:
                binding = Binding(location=self.const_int(args[0]))
            else:
                raise RaiseError(f"unsupported attribute @{name} on {where}")
        return binding

    # ------------------------------------------------------------------
    # globals and functions
    # ------------------------------------------------------------------

    def _global(self, decl: AstNode):
        template, name, ty_node, init = _decl_parts(decl)
        if ty_node is None:
            raise RaiseError(f"global {name} needs a type")
        if init is not None:
            raise RaiseError(f"initializer on global {name}")
        attrs = dict(_attributes(decl.children))
        space = template[0] if template else None
        ty = self.type_handle(ty_node)
        if space == 'private' and len(template) == 1 and not attrs:
            var = GlobalVar(self.ir_names[name], ty, 'private')
        elif space == 'storage' and template[1:] in ([], ['read'], ['read_write']) \
                and set(attrs) == {'group', 'binding'} \
                and len(attrs['group']) == 1 and len(attrs['binding']) == 1:
            var = GlobalVar(self.ir_names[name], ty, 'storage',
                            self.const_int(attrs['group'][0]), self.const_int(attrs['binding'][0]))
        else:
            raise RaiseError(f"unsupported global variable {name} (address space {space})")
        self.module_scope[name] = _Entry('global', len(self.module.globals))
        self.module.globals.append(var)

    def _call_order(self) -> List[str]:
        """Function names with every callee before its callers."""
        callees = {}
        for name, decl in self.function_nodes.items():
            called = []
            for node in iter_nodes(decl):
                if node.kind == NodeKind.CALL_EXPR and node.children[0].kind == NodeKind.IDENTIFIER:
                    callee = node.children[0].text
                    if callee in self.function_nodes and callee not in called:
                        called.append(callee)
            callees[name] = called

        order, state = [], {}

        def visit(name):
            if state.get(name) == 'done':
                return
            if state.get(name) == 'active':
                raise RaiseError(f"recursive call of {name}")
            state[name] = 'active'
            for callee in callees[name]:
                visit(callee)
            state[name] = 'done'
            order.append(name)

        for name in self.function_nodes:
            visit(name)
        return order


# ============================================================================
# Function level
# ============================================================================

class _FunctionRaiser:

    def __init__(self, owner: _ModuleRaiser, decl: AstNode, name: str):
        self.owner = owner
        self.module = owner.module
        self.decl = decl
        self.function = Function(name)
        self.taken = set(owner.taken)
        self.scope = ChainMap({}, owner.module_scope)
        self._globals: Dict[int, int] = {}
        self._expanding = set()

    def run(self) -> Function:
        self._header()
        body = _first(self.decl, NodeKind.COMPOUND_STMT)
        if body is None:
            raise RaiseError(f"function {self.function.name} has no body")
        f = self.function
        self.compound(body, f.body)
        if f.result is not None and not (f.body and isinstance(f.body[-1], Return)):
            # every path returned already; the IR still wants a final return
            value = zero_value(self.module, f, f.result.ty)
            self._emit(value, f.body)
            f.body.append(Return(value))
        return f

    def _header(self):
        f = self.function
        workgroup = None
        for name, args in _attributes(self.decl.children):
            if name in ('vertex', 'fragment', 'compute') and not args and f.stage is None:
                f.stage = name
            elif name == 'workgroup_size' and 1 <= len(args) <= 3:
                sizes = [self.owner.const_int(a) for a in args]
                workgroup = tuple(sizes + [1] * (3 - len(sizes)))
            else:
                raise RaiseError(f"unsupported attribute @{name} on function {f.name}")
        if (workgroup is not None) != (f.stage == 'compute'):
            raise RaiseError("@workgroup_size goes with @compute and nothing else")
        if workgroup is not None:
            f.workgroup_size = workgroup

        names = []
        param_list = _first(self.decl, NodeKind.PARAM_LIST)
        for param in (param_list.children if param_list is not None else []):
            if param.kind != NodeKind.PARAM:
                continue
            name = _name_of(param)
            if name in names:
                raise RaiseError(f"parameter {name} declared twice")
            ty_node = _first(param, NodeKind.TYPE_EXPR)
            if ty_node is None:
                raise RaiseError(f"parameter {name} without a type")
            binding = self.owner.binding(_attributes(param.children), f"parameter {name}")
            f.params.append(FunctionParam(_fresh(name, self.taken), self.owner.type_handle(ty_node), binding))
            names.append(name)
        for k, name in enumerate(names):
            self.scope[name] = _Entry('value', self._typed(FunctionArgument(k)))

        ret = _first(self.decl, NodeKind.RETURN_TYPE)
        if ret is not None:
            binding = self.owner.binding(_attributes(ret.children), f"result of {f.name}")
            f.result = FunctionResult(self.owner.type_handle(_first(ret, NodeKind.TYPE_EXPR)), binding)

    # ------------------------------------------------------------------
    # plumbing
    # ------------------------------------------------------------------

    def _typed(self, expr) -> int:
        try:
            return add_typed(self.module, self.function, expr)
        except IrTypeError as e:
            raise RaiseError(str(e)) from e

    def _emit(self, handle: int, out: list):
        expr = self.function.expressions[handle]
        if not isinstance(expr, ALWAYS_VISIBLE + (CallResult,)):
            out.append(Emit(handle))

    def _add(self, expr, out: list) -> int:
        handle = self._typed(expr)
        self._emit(handle, out)
        return handle

    def _type(self, handle: int) -> IrType:
        return self.module.types[self.function.expressions[handle].ty]

    def _kind(self, handle: int) -> Optional[str]:
        return _scalar_kind(self._type(handle))

    def _declare(self, name: str, entry: _Entry):
        if name in self.scope.maps[0]:
            raise RaiseError(f"'{name}' declared twice in one scope")
        self.scope[name] = entry

    @contextmanager
    def _nested(self):
        saved = self.scope
        self.scope = saved.new_child()
        try:
            yield
        finally:
            self.scope = saved

    def _global_expr(self, index: int) -> int:
        if index not in self._globals:
            self._globals[index] = self._typed(GlobalVariable(index))
        return self._globals[index]

    def load(self, pointer: int, out: list) -> int:
        return self._add(Load(pointer), out)

    # ------------------------------------------------------------------
    # statements
    # ------------------------------------------------------------------

    def compound(self, node: AstNode, out: list):
        with self._nested():
            for stmt in _operands(node):
                self.statement(stmt, out)

    def statement(self, node: AstNode, out: list):
        handler = self._STATEMENTS.get(node.kind)
        if handler is None:
            raise RaiseError(f"unsupported statement {node.kind.value}")
        handler(self, node, out)

    def _var_stmt(self, node, out):
        template, name, ty_node, init = _decl_parts(node)
        if template not in (None, ['function']):
            raise RaiseError(f"variable {name} in address space {template[0]}")
        declared = self.owner.type_of(ty_node) if ty_node is not None else None
        value = None
        if init is not None:
            value = self.value(init, out, _scalar_kind(declared))
        if declared is not None:
            ty = self.module.intern(declared)
        elif value is not None:
            ty = self.function.expressions[value].ty
        else:
            raise RaiseError(f"variable {name} needs a type or an initializer")
        f = self.function
        f.locals.append(LocalVar(_fresh(name, self.taken), ty))
        pointer = self._typed(LocalVariable(len(f.locals) - 1))
        if value is not None:
            out.append(Store(pointer, value))
        self._declare(name, _Entry('ref', pointer))

    def _let_stmt(self, node, out):
        _, name, ty_node, init = _decl_parts(node)
        declared = self.owner.type_of(ty_node) if ty_node is not None else None
        kind, handle = self.operand(init, out, _scalar_kind(declared))
        if kind == 'ref':
            kind, handle = 'value', self.load(handle, out)
        if declared is not None and self._type(handle) != declared:
            raise RaiseError(f"let {name} is not of its declared type")
        self._declare(name, _Entry(kind, handle))

    def _const_decl(self, node, out):
        _, name, ty_node, init = _decl_parts(node)
        if init is None:
            raise RaiseError(f"constant {name} without initializer")
        self._declare(name, _Entry('const', node=init, type_node=ty_node, scope=self.scope))

    def _assign_stmt(self, node, out):
        lhs, op_node, rhs = node.children[:3]
        op = op_node.text
        if lhs.kind == NodeKind.IDENTIFIER and lhs.text == '_':
            if op != '=':
                raise RaiseError("compound assignment to '_'")
            self.value(rhs, out)
            return
        pointer = self.reference(lhs, out)
        hint = _scalar_kind(self.module.types[self._type(pointer).pointee])
        if op == '=':
            value = self.value(rhs, out, hint)
        else:
            current = self.load(pointer, out)
            operand = self.value(rhs, out, 'u32' if op in ('<<=', '>>=') else hint)
            value = self._add(Binary(BINARY_OPS_BY_SYMBOL[op[:-1]], current, operand), out)
        out.append(Store(pointer, value))

    def _increment_stmt(self, node, out):
        pointer = self.reference(node.children[0], out)
        pointee = self.module.types[self._type(pointer).pointee]
        if pointee not in (Scalar('i32'), Scalar('u32')):
            raise RaiseError(f"increment of {pointee}")
        current = self.load(pointer, out)
        one = self._typed(Literal(1, pointee.kind))
        op = 'add' if node.children[1].text == '++' else 'sub'
        out.append(Store(pointer, self._add(Binary(op, current, one), out)))

    def _call_stmt(self, node, out):
        self.call(node.children[0], out, statement=True)

    def _if_stmt(self, node, out):
        parts = _operands(node)
        stmt = If(self.value(parts[0], out, 'bool'))
        self.compound(parts[1], stmt.accept)
        if len(parts) > 2:
            target = _operands(parts[2])[0]
            if target.kind == NodeKind.IF_STMT:
                self._if_stmt(target, stmt.reject)
            else:
                self.compound(target, stmt.reject)
        out.append(stmt)

    def _loop_body(self, body: AstNode, loop: Loop, condition: Optional[AstNode] = None,
                   allow_continuing: bool = True):
        with self._nested():
            if condition is not None:
                check = self.value(condition, loop.body, 'bool')
                loop.body.append(If(check, [], [Break()]))
            statements = _operands(body)
            for i, stmt in enumerate(statements):
                if stmt.kind != NodeKind.CONTINUING_STMT:
                    self.statement(stmt, loop.body)
                    continue
                if not allow_continuing or i != len(statements) - 1:
                    raise RaiseError("misplaced continuing block")
                # the continuing block sees the loop body's declarations
                with self._nested():
                    inner = _operands(_operands(stmt)[0])
                    for j, cont in enumerate(inner):
                        if cont.kind == NodeKind.BREAK_IF_STMT:
                            if j != len(inner) - 1:
                                raise RaiseError("break if must end the continuing block")
                            loop.break_if = self.value(_operands(cont)[0], loop.continuing, 'bool')
                        else:
                            self.statement(cont, loop.continuing)

    def _loop_stmt(self, node, out):
        loop = Loop()
        self._loop_body(_operands(node)[0], loop)
        out.append(loop)

    def _for_stmt(self, node, out):
        header = _first(node, NodeKind.FOR_HEADER)
        segments = [[], [], []]
        index = 0
        for child in header.children:
            if _is_token(child, ';'):
                index += 1
            elif child.kind != NodeKind.TOKEN:
                segments[index].append(child)
        init, condition, update = (seg[0] if seg else None for seg in segments)
        with self._nested():
            if init is not None:
                self.statement(init, out)
            loop = Loop()
            self._loop_body(_first(node, NodeKind.COMPOUND_STMT), loop, condition, allow_continuing=False)
            if update is not None:
                with self._nested():
                    self.statement(update, loop.continuing)
            out.append(loop)

    def _while_stmt(self, node, out):
        condition, body = _operands(node)
        loop = Loop()
        self._loop_body(body, loop, condition, allow_continuing=False)
        out.append(loop)

    def _switch_stmt(self, node, out):
        parts = _operands(node)
        selector = self.value(parts[0], out)
        kind = self._kind(selector)
        if self._type(selector) not in (Scalar('i32'), Scalar('u32')):
            raise RaiseError("switch selector must be i32 or u32")
        stmt = Switch(selector)
        for clause in parts[1:]:
            case = SwitchCase([], default=any(_is_token(c, 'default') for c in clause.children))
            body = None
            for child in _operands(clause):
                if child.kind == NodeKind.COMPOUND_STMT:
                    body = child
                else:
                    case.values.append(self._case_value(child, kind))
            self.compound(body, case.body)
            stmt.cases.append(case)
        out.append(stmt)

    def _case_value(self, node, kind: str) -> int:
        value = self.owner.const_int(node)
        if kind == 'u32' and value < 0:
            raise RaiseError(f"negative case value {value} for a u32 selector")
        return value

    def _break_stmt(self, node, out):
        out.append(Break())

    def _continue_stmt(self, node, out):
        out.append(Continue())

    def _return_stmt(self, node, out):
        parts = _operands(node)
        if not parts:
            out.append(Return())
            return
        result = self.function.result
        hint = _scalar_kind(self.module.types[result.ty]) if result is not None else None
        out.append(Return(self.value(parts[0], out, hint)))

    def _empty_stmt(self, node, out):
        pass

    _STATEMENTS = {
        NodeKind.COMPOUND_STMT: compound,
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
        NodeKind.EMPTY_STMT: _empty_stmt,
    }

    # ------------------------------------------------------------------
    # expressions
    # ------------------------------------------------------------------

    def value(self, node: AstNode, out: list, hint: Optional[str] = None) -> int:
        """Handle of the value of `node`; references are loaded."""
        kind, handle = self.operand(node, out, hint)
        if kind == 'ref':
            return self.load(handle, out)
        return handle

    def reference(self, node: AstNode, out: list) -> int:
        kind, handle = self.operand(node, out)
        if kind not in ('ref', 'pointer'):
            raise RaiseError("assignment to something that is not a variable")
        return handle

    def operand(self, node: AstNode, out: list, hint: Optional[str] = None) -> Tuple[str, int]:
        """('value' | 'ref' | 'pointer', handle) for an expression node."""
        kind = node.kind
        if kind == NodeKind.LITERAL:
            return 'value', self.literal(node.text, hint)
        if kind == NodeKind.PAREN_EXPR:
            return self.operand(_operands(node)[0], out, hint)
        if kind == NodeKind.IDENTIFIER:
            return self._identifier(node.text, out, hint)
        if kind == NodeKind.UNARY_EXPR:
            return self._unary(node, out, hint)
        if kind == NodeKind.BINARY_EXPR:
            return 'value', self._binary(node, out, hint)
        if kind == NodeKind.CALL_EXPR:
            return 'value', self.call(node, out, hint=hint)
        if kind == NodeKind.MEMBER_EXPR:
            return self._member(node, out)
        if kind == NodeKind.INDEX_EXPR:
            return self._index(node, out)
        raise RaiseError(f"unsupported expression {kind.value}")

    def literal(self, text: str, hint: Optional[str], negate: bool = False) -> int:
        if text in ('true', 'false'):
            if negate:
                raise RaiseError("negation of a bool literal")
            return self._typed(Literal(text == 'true', 'bool'))
        value, kind = _number(text)
        if kind == 'f16':
            raise RaiseError("f16 literals are not supported")
        if negate:
            value = -value
        if kind == 'aint':
            kind = hint if hint in NUMERIC_KINDS else 'i32'
        elif kind == 'afloat':
            kind = 'f32'
        if negate and kind == 'u32':
            raise RaiseError("negation of an unsigned literal")
        if kind == 'f32':
            value = float(value)
        return self._typed(Literal(value, kind))

    def _identifier(self, name: str, out: list, hint: Optional[str]) -> Tuple[str, int]:
        entry = self.scope.get(name)
        if entry is None:
            raise RaiseError(f"unknown identifier '{name}'")
        if entry.kind == 'global':
            return 'ref', self._global_expr(entry.handle)
        if entry.kind == 'const':
            return 'value', self._const_value(entry, out, hint)
        return entry.kind, entry.handle

    def _const_value(self, entry: _Entry, out: list, hint: Optional[str]) -> int:
        """Constants are translated again at every use."""
        key = id(entry.node)
        if key in self._expanding:
            raise RaiseError("constant refers to itself")
        declared = self.owner.type_of(entry.type_node) if entry.type_node is not None else None
        saved = self.scope
        self._expanding.add(key)
        self.scope = entry.scope if entry.scope is not None else ChainMap(self.owner.module_scope)
        try:
            handle = self.value(entry.node, out, _scalar_kind(declared) if declared is not None else hint)
        finally:
            self.scope = saved
            self._expanding.discard(key)
        if declared is not None and self._type(handle) != declared:
            raise RaiseError("constant is not of its declared type")
        return handle

    def abstract(self, node: AstNode, depth: int = 0) -> bool:
        """True for expressions built only from unsuffixed numeric literals."""
        kind = node.kind
        if depth > 64:
            return False
        if kind == NodeKind.LITERAL:
            return node.text not in ('true', 'false') and _number(node.text)[1] in ('aint', 'afloat')
        if kind == NodeKind.PAREN_EXPR:
            return self.abstract(_operands(node)[0], depth + 1)
        if kind == NodeKind.UNARY_EXPR:
            return node.children[0].text in ('-', '~') and self.abstract(node.children[1], depth + 1)
        if kind == NodeKind.BINARY_EXPR:
            return node.children[1].text in ABSTRACT_BINARY_SYMBOLS and \
                self.abstract(node.children[0], depth + 1) and self.abstract(node.children[2], depth + 1)
        if kind == NodeKind.IDENTIFIER:
            entry = self.scope.get(node.text)
            return entry is not None and entry.kind == 'const' and entry.type_node is None \
                and self.abstract(entry.node, depth + 1)
        return False

    def _default_kind(self, nodes, hint: Optional[str]) -> str:
        if hint is not None:
            return hint
        return 'f32' if any(_has_float_literal(n) for n in nodes) else 'i32'

    def _unify(self, nodes: List[AstNode], out: list, hint: Optional[str]) -> List[int]:
        """Values of `nodes`, abstract ones concretized to the kind of the others."""
        handles: List[Optional[int]] = [None] * len(nodes)
        kind = None
        for i, node in enumerate(nodes):
            if not self.abstract(node):
                handles[i] = self.value(node, out, hint)
                kind = kind or self._kind(handles[i])
        kind = kind or self._default_kind(nodes, hint)
        for i, node in enumerate(nodes):
            if handles[i] is None:
                handles[i] = self.value(node, out, kind)
        return handles

    def _unary(self, node: AstNode, out: list, hint: Optional[str]) -> Tuple[str, int]:
        if len(node.children) != 2:
            raise RaiseError("unary operator without operand")
        op, operand = node.children[0].text, node.children[1]
        if op == '&':
            kind, handle = self.operand(operand, out)
            if kind != 'ref':
                raise RaiseError("address of something that is not a variable")
            return 'pointer', handle
        if op == '*':
            kind, handle = self.operand(operand, out)
            if kind != 'pointer':
                raise RaiseError("dereference of a non-pointer")
            return 'ref', handle
        if op == '-' and operand.kind == NodeKind.LITERAL:
            return 'value', self.literal(operand.text, hint, negate=True)
        if op not in UNARY_OPS_BY_SYMBOL:
            raise RaiseError(f"unsupported unary operator '{op}'")
        inner = 'bool' if op == '!' else hint
        return 'value', self._add(Unary(UNARY_OPS_BY_SYMBOL[op], self.value(operand, out, inner)), out)

    def _binary(self, node: AstNode, out: list, hint: Optional[str]) -> int:
        if len(node.children) != 3:
            raise RaiseError("binary operator without right operand")
        left, op_node, right = node.children
        op = BINARY_OPS_BY_SYMBOL.get(op_node.text)
        if op is None:
            raise RaiseError(f"unsupported binary operator '{op_node.text}'")
        if op in SHIFT_OPS:
            lhs = self.value(left, out, hint)
            rhs = self.value(right, out, 'u32')
        elif op in LOGICAL_OPS:
            lhs = self.value(left, out, 'bool')
            rhs = self.value(right, out, 'bool')
        else:
            inner = hint if op in ARITHMETIC_OPS + BITWISE_OPS else None
            lhs, rhs = self._unify([left, right], out, inner)
        return self._add(Binary(op, lhs, rhs), out)

    def _member(self, node: AstNode, out: list) -> Tuple[str, int]:
        base, field = node.children[0], node.children[-1]
        kind, handle = self.operand(base, out)
        if kind == 'pointer':
            kind = 'ref'
        ty = self._type(handle)
        inner = self.module.types[ty.pointee] if kind == 'ref' else ty
        if isinstance(inner, Struct):
            names = [m.name for m in inner.members]
            if field.text not in names:
                raise RaiseError(f"{inner.name} has no member {field.text}")
            return kind, self._add(AccessIndex(handle, names.index(field.text)), out)
        if isinstance(inner, Vector):
            letters = field.text
            letter_set = next((s for s in SWIZZLE_SETS if all(c in s for c in letters)), None)
            if letter_set is None or not 1 <= len(letters) <= 4:
                raise RaiseError(f"invalid swizzle .{letters}")
            indices = [letter_set.index(c) for c in letters]
            if max(indices) >= inner.size:
                raise RaiseError(f"swizzle .{letters} on a {inner.size}-component vector")
            if len(indices) == 1:
                return kind, self._add(AccessIndex(handle, indices[0]), out)
            if kind == 'ref':
                handle = self.load(handle, out)
            parts = [self._add(AccessIndex(handle, i), out) for i in indices]
            ty_handle = self.module.intern(Vector(len(indices), inner.element))
            return 'value', self._add(Compose(parts, ty=ty_handle), out)
        raise RaiseError(f"member access .{field.text} on {inner}")

    def _index(self, node: AstNode, out: list) -> Tuple[str, int]:
        base, index = node.children[0], node.children[2]
        kind, handle = self.operand(base, out)
        if kind == 'pointer':
            kind = 'ref'
        if index.kind == NodeKind.LITERAL and index.text not in ('true', 'false'):
            value = _number(index.text)[0]
            if isinstance(value, int):
                return kind, self._add(AccessIndex(handle, value), out)
        position = self.value(index, out, 'i32')
        return kind, self._add(Access(handle, position), out)

    # ------------------------------------------------------------------
    # calls and constructors
    # ------------------------------------------------------------------

    def call(self, node: AstNode, out: list, statement: bool = False,
             hint: Optional[str] = None) -> Optional[int]:
        callee, arg_list = node.children[0], node.children[-1]
        args = _operands(arg_list)
        if callee.kind == NodeKind.TYPE_EXPR and len(callee.children) > 1:
            return self._construct(self.owner.type_of(callee), args, out)
        name = callee.text if callee.kind == NodeKind.IDENTIFIER else callee.children[0].text
        if name in self.owner.function_index:
            return self._call_function(name, args, out, statement)
        if statement:
            raise RaiseError(f"'{name}' cannot be called as a statement")
        if name in self.owner.struct_nodes:
            return self._construct(self.module.types[self.owner.struct_handle(name)], args, out)
        if name in SCALAR_KINDS:
            return self._construct(Scalar(name), args, out)
        if name in TYPE_ALIASES:
            return self._construct(TYPE_ALIASES[name], args, out)
        if name in VECTOR_SIZES or name in MATRIX_SHAPES or name == 'array':
            return self._construct_inferred(name, args, out, hint)
        if name in BUILTINS or name in POINTER_BUILTINS:
            return self._builtin(name, args, out, hint)
        raise RaiseError(f"unknown function '{name}'")

    def _call_function(self, name: str, args, out: list, statement: bool) -> Optional[int]:
        index = self.owner.function_index[name]
        callee = self.module.functions[index]
        if callee.is_entry_point:
            raise RaiseError(f"call of entry point {name}")
        if len(args) != len(callee.params):
            raise RaiseError(f"{name} takes {len(callee.params)} arguments, not {len(args)}")
        handles = [self.value(a, out, _scalar_kind(self.module.types[p.ty]))
                   for a, p in zip(args, callee.params)]
        result = None
        if callee.result is not None:
            result = self._typed(CallResult(index))
        elif not statement:
            raise RaiseError(f"{name} returns nothing")
        out.append(Call(index, handles, result))
        return result

    def _construct(self, ty: IrType, args, out: list) -> int:
        ty_handle = self.module.intern(ty)
        if isinstance(ty, Struct):
            if len(args) not in (0, len(ty.members)):
                raise RaiseError(f"{ty.name} has {len(ty.members)} members")
            hints = [_scalar_kind(self.module.types[m.ty]) for m in ty.members]
        elif isinstance(ty, Array):
            hints = [_scalar_kind(self.module.types[ty.element])] * len(args)
        else:
            hints = [_scalar_kind(ty)] * len(args)
        handles = [self.value(a, out, h) for a, h in zip(args, hints)]
        return self._add(Compose(handles, ty=ty_handle), out)

    def _construct_inferred(self, name: str, args, out: list, hint: Optional[str]) -> int:
        if not args:
            raise RaiseError(f"{name}() needs a template argument or components")
        if name in MATRIX_SHAPES:
            handles = [self.value(a, out, 'f32') for a in args]
            ty = Matrix(*MATRIX_SHAPES[name])
        else:
            handles = self._unify(args, out, hint)
            if name == 'array':
                ty = Array(self.function.expressions[handles[0]].ty, len(handles))
            else:
                element = scalar_of(self._type(handles[0]))
                if element is None:
                    raise RaiseError(f"{name} of non-scalar components")
                ty = Vector(VECTOR_SIZES[name], element)
        return self._add(Compose(handles, ty=self.module.intern(ty)), out)

    def _builtin(self, name: str, args, out: list, hint: Optional[str]) -> int:
        if name in POINTER_BUILTINS:
            if len(args) != 1:
                raise RaiseError(f"{name} takes one argument")
            kind, handle = self.operand(args[0], out)
            if kind != 'pointer':
                raise RaiseError(f"{name} needs a pointer argument")
            return self._add(BuiltinCall(name, [handle]), out)
        if name == 'select':
            if len(args) != 3:
                raise RaiseError("select takes three arguments")
            handles = self._unify(args[:2], out, hint) + [self.value(args[2], out, 'bool')]
        else:
            handles = self._unify(args, out, hint)
        return self._add(BuiltinCall(name, handles), out)


# ============================================================================
# Entry point
# ============================================================================

def raise_module(tree: AstTree) -> IrModule:
    """Translate an error-free syntax tree into a well-formed IrModule.

    Args:
        tree: Parsed program

    Returns:
        Module that passes ``ir.audit.check_module``

    Raises:
        RaiseError: If the tree has errors or uses constructs the IR lacks
    """
    if tree.error_count():
        raise RaiseError("tree contains syntax errors")
    old_limit = sys.getrecursionlimit()
    if old_limit < PARSER_RECURSION_LIMIT:
        sys.setrecursionlimit(PARSER_RECURSION_LIMIT)
    try:
        return _ModuleRaiser(tree.root).run()
    except RecursionError as e:
        raise RaiseError("program nests too deeply") from e
    finally:
        if old_limit < PARSER_RECURSION_LIMIT:
            sys.setrecursionlimit(old_limit)
