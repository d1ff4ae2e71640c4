"""
Concrete syntax tree for the supported WGSL subset.

Every token of the source is a leaf (identifiers, literals, keywords and
punctuation), so concatenating leaf texts reproduces the program. Interior
nodes carry no text. Trees are value-like: mutations work on clones.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, List, Optional, Tuple


class NodeKind(str, Enum):
    # structure
    TRANSLATION_UNIT = 'translation_unit'
    STRUCT_DECL = 'struct_decl'
    STRUCT_MEMBER = 'struct_member'
    FUNCTION_DECL = 'function_decl'
    PARAM_LIST = 'param_list'
    PARAM = 'param'
    RETURN_TYPE = 'return_type'
    GLOBAL_VAR_DECL = 'global_var_decl'
    CONST_DECL = 'const_decl'
    ATTRIBUTE = 'attribute'
    TYPE_EXPR = 'type_expr'
    TEMPLATE_LIST = 'template_list'
    # statements
    COMPOUND_STMT = 'compound_stmt'
    VAR_STMT = 'var_stmt'
    LET_STMT = 'let_stmt'
    ASSIGN_STMT = 'assign_stmt'
    INCREMENT_STMT = 'increment_stmt'
    CALL_STMT = 'call_stmt'
    IF_STMT = 'if_stmt'
    ELSE_CLAUSE = 'else_clause'
    LOOP_STMT = 'loop_stmt'
    CONTINUING_STMT = 'continuing_stmt'
    FOR_STMT = 'for_stmt'
    FOR_HEADER = 'for_header'
    WHILE_STMT = 'while_stmt'
    SWITCH_STMT = 'switch_stmt'
    CASE_CLAUSE = 'case_clause'
    BREAK_STMT = 'break_stmt'
    BREAK_IF_STMT = 'break_if_stmt'
    CONTINUE_STMT = 'continue_stmt'
    RETURN_STMT = 'return_stmt'
    DISCARD_STMT = 'discard_stmt'
    EMPTY_STMT = 'empty_stmt'
    # expressions
    BINARY_EXPR = 'binary_expr'
    UNARY_EXPR = 'unary_expr'
    CALL_EXPR = 'call_expr'
    ARG_LIST = 'arg_list'
    MEMBER_EXPR = 'member_expr'
    INDEX_EXPR = 'index_expr'
    PAREN_EXPR = 'paren_expr'
    # leaves
    IDENTIFIER = 'identifier'
    LITERAL = 'literal'
    TOKEN = 'token'
    # recovery
    ERROR = 'error'


LEAF_KINDS = frozenset({NodeKind.IDENTIFIER, NodeKind.LITERAL, NodeKind.TOKEN})

STATEMENT_KINDS = frozenset({
    NodeKind.COMPOUND_STMT, NodeKind.VAR_STMT, NodeKind.LET_STMT,
    NodeKind.ASSIGN_STMT, NodeKind.INCREMENT_STMT, NodeKind.CALL_STMT,
    NodeKind.IF_STMT, NodeKind.LOOP_STMT, NodeKind.FOR_STMT, NodeKind.WHILE_STMT,
    NodeKind.SWITCH_STMT, NodeKind.BREAK_STMT, NodeKind.BREAK_IF_STMT,
    NodeKind.CONTINUE_STMT, NodeKind.RETURN_STMT, NodeKind.DISCARD_STMT,
    NodeKind.EMPTY_STMT,
})

EXPRESSION_KINDS = frozenset({
    NodeKind.BINARY_EXPR, NodeKind.UNARY_EXPR, NodeKind.CALL_EXPR,
    NodeKind.MEMBER_EXPR, NodeKind.INDEX_EXPR, NodeKind.PAREN_EXPR,
    NodeKind.IDENTIFIER, NodeKind.LITERAL,
})

DECLARATION_KINDS = frozenset({
    NodeKind.STRUCT_DECL, NodeKind.FUNCTION_DECL, NodeKind.GLOBAL_VAR_DECL,
    NodeKind.CONST_DECL,
})


class AstNode:
    """One tree node.

    Leaves have non-empty `text` and no children; interior nodes have empty
    `text` and at least one child (only the translation-unit root may be
    empty).
    """

    __slots__ = ('kind', 'text', 'children')

    def __init__(self, kind: NodeKind, text: str = '', children: Optional[List['AstNode']] = None):
        self.kind = kind
        self.text = text
        self.children = children if children is not None else []

    @classmethod
    def leaf(cls, kind: NodeKind, text: str) -> 'AstNode':
        return cls(kind, text, [])

    @property
    def is_leaf(self) -> bool:
        return self.kind in LEAF_KINDS

    def clone(self) -> 'AstNode':
        """Deep copy without recursion."""
        root = AstNode(self.kind, self.text, [])
        stack = [(self, root)]
        while stack:
            src, dst = stack.pop()
            for child in src.children:
                copy = AstNode(child.kind, child.text, [])
                dst.children.append(copy)
                if child.children:
                    stack.append((child, copy))
        return root

    def __repr__(self):
        if self.is_leaf:
            return f"AstNode({self.kind.value}, {self.text!r})"
        return f"AstNode({self.kind.value}, {len(self.children)} children)"


@dataclass
class Diagnostic:
    """A parse problem that did not produce an error node (e.g. a missing token)."""
    code: str  # 'syntax' or 'limit'
    message: str
    offset: int = -1


@dataclass
class AstTree:
    root: AstNode
    diagnostics: List[Diagnostic] = field(default_factory=list)

    def clone(self) -> 'AstTree':
        return AstTree(self.root.clone(), list(self.diagnostics))

    def node_count(self) -> int:
        return node_count(self.root)

    def depth(self) -> int:
        return tree_depth(self.root)

    def error_count(self) -> int:
        """Error nodes plus diagnostics."""
        errors = sum(1 for n in iter_nodes(self.root) if n.kind == NodeKind.ERROR)
        return errors + len(self.diagnostics)

    def has_limit_diagnostic(self) -> bool:
        return any(d.code == 'limit' for d in self.diagnostics)


# ============================================================================
# Traversal helpers (iterative; mutated trees can be deep)
# ============================================================================

def iter_nodes(root: AstNode) -> Iterator[AstNode]:
    """Pre-order traversal."""
    stack = [root]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(node.children))


def iter_with_paths(root: AstNode) -> Iterator[Tuple[Tuple[int, ...], AstNode]]:
    """Pre-order traversal yielding (path, node); path is the child-index chain."""
    stack = [((), root)]
    while stack:
        path, node = stack.pop()
        yield path, node
        for i in range(len(node.children) - 1, -1, -1):
            stack.append((path + (i,), node.children[i]))


def iter_with_depth(root: AstNode) -> Iterator[Tuple[int, AstNode]]:
    stack = [(1, root)]
    while stack:
        depth, node = stack.pop()
        yield depth, node
        for child in reversed(node.children):
            stack.append((depth + 1, child))


def node_count(root: AstNode) -> int:
    return sum(1 for _ in iter_nodes(root))


def tree_depth(root: AstNode) -> int:
    return max(depth for depth, _ in iter_with_depth(root))


def node_at(root: AstNode, path: Tuple[int, ...]) -> AstNode:
    node = root
    for index in path:
        node = node.children[index]
    return node


def replace_at(root: AstNode, path: Tuple[int, ...], new: AstNode) -> AstNode:
    """Replace the node at `path` in place; returns the (possibly new) root."""
    if not path:
        return new
    parent = node_at(root, path[:-1])
    parent.children[path[-1]] = new
    return root


def leaves(root: AstNode) -> List[AstNode]:
    return [n for n in iter_nodes(root) if n.is_leaf]


def structural_equal(a: AstNode, b: AstNode) -> bool:
    """Equality over kinds and leaf texts."""
    stack = [(a, b)]
    while stack:
        x, y = stack.pop()
        if x.kind != y.kind or x.text != y.text or len(x.children) != len(y.children):
            return False
        stack.extend(zip(x.children, y.children))
    return True


def well_formed(root: AstNode) -> bool:
    """Leaf/interior invariants; the translation-unit root may be empty."""
    for node in iter_nodes(root):
        if node.is_leaf:
            if not node.text or node.children:
                return False
        else:
            if node.text:
                return False
            if not node.children and not (node is root and node.kind == NodeKind.TRANSLATION_UNIT):
                return False
    return True


def identifier_texts(root: AstNode) -> List[str]:
    """Distinct identifier spellings in first-occurrence order."""
    seen = {}
    for node in iter_nodes(root):
        if node.kind == NodeKind.IDENTIFIER and node.text not in seen:
            seen[node.text] = None
    return list(seen)
