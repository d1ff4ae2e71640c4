"""
The six grammar-level mutations.

Each operator is a small class with ``sites(tree)`` (where it could apply)
and ``apply_at(tree, site, rng, ctx)`` (apply at one site, or return None if
that site turns out to be inapplicable). Operators work on a clone; the
input tree is never modified. ``mutate_ast`` is the driver the engine uses:
it picks a site uniformly, enforces the size caps and falls back to another
operator when the requested one has nothing to do.
"""

import re
import random
from dataclasses import dataclass, field
from typing import Any, List, Optional, Sequence, Tuple

from config.config import MAX_AST_NODES, MAX_AST_DEPTH, RECURSIVE_REPLACE_BUDGET, AST_MUTATION_RETRIES
from syntax.dictionary import TokenDictionary, default_dictionary
from syntax.lexer import KEYWORDS
from syntax.nodes import (
    AstNode, AstTree, NodeKind, EXPRESSION_KINDS, iter_nodes, iter_with_paths,
    node_at, node_count, tree_depth, replace_at, structural_equal, identifier_texts,
)


@dataclass
class MutationResult:
    """Outcome of one mutation request.

    ``applied`` is False when no applicable site existed; ``tree`` is then
    the unchanged input. ``operator`` names the operator that actually ran.
    """
    tree: Any
    operator: str
    applied: bool


@dataclass
class AstMutationContext:
    dictionary: TokenDictionary = field(default_factory=default_dictionary)
    donors: Sequence[AstTree] = ()
    max_nodes: int = MAX_AST_NODES
    max_depth: int = MAX_AST_DEPTH
    recursive_budget: int = RECURSIVE_REPLACE_BUDGET


Path = Tuple[int, ...]

_IDENT_RE = re.compile(r'^[A-Za-z_][A-Za-z0-9_]*$')
_NUMBER_RE = re.compile(r'^-?(0[xX][0-9a-fA-F]+|[0-9]*\.?[0-9]+([eE][+-]?[0-9]+)?)[iufh]?$')

# parents whose expression children may be replaced by another expression,
# with the child indices that are *not* expression slots
_EXPRESSION_PARENTS = {
    NodeKind.BINARY_EXPR: {1},
    NodeKind.UNARY_EXPR: {0},
    NodeKind.PAREN_EXPR: set(),
    NodeKind.ARG_LIST: set(),
    NodeKind.INDEX_EXPR: set(),
    NodeKind.RETURN_STMT: set(),
    NodeKind.IF_STMT: set(),
    NodeKind.WHILE_STMT: set(),
    NodeKind.SWITCH_STMT: set(),
    NodeKind.BREAK_IF_STMT: set(),
    NodeKind.ASSIGN_STMT: set(),
    NodeKind.FOR_HEADER: set(),
}
_DECL_PARENTS = frozenset({NodeKind.LET_STMT, NodeKind.VAR_STMT, NodeKind.CONST_DECL,
                           NodeKind.GLOBAL_VAR_DECL})


def classify_leaf(text: str) -> NodeKind:
    """Leaf kind the parser would give `text`."""
    if text in ('true', 'false') or _NUMBER_RE.match(text):
        return NodeKind.LITERAL
    if _IDENT_RE.match(text) and text not in KEYWORDS:
        return NodeKind.IDENTIFIER
    return NodeKind.TOKEN


def is_expression_slot(parent: AstNode, index: int) -> bool:
    child = parent.children[index]
    if child.kind not in EXPRESSION_KINDS:
        return False
    if parent.kind == NodeKind.MEMBER_EXPR:
        return index == 0
    if parent.kind in _DECL_PARENTS:
        # only the initializer, which follows '='
        return any(c.kind == NodeKind.TOKEN and c.text == '=' for c in parent.children[:index])
    excluded = _EXPRESSION_PARENTS.get(parent.kind)
    return excluded is not None and index not in excluded


def is_statement_slot(parent: AstNode, index: int) -> bool:
    child = parent.children[index]
    return parent.kind == NodeKind.COMPOUND_STMT and not child.is_leaf


def _paths_where(root: AstNode, predicate) -> List[Tuple[Path, AstNode]]:
    """(path, node) for every non-root node with predicate(parent, index)."""
    out = []
    stack = [((), root)]
    while stack:
        path, node = stack.pop()
        for i in range(len(node.children) - 1, -1, -1):
            child_path = path + (i,)
            if predicate(node, i):
                out.append((child_path, node.children[i]))
            stack.append((child_path, node.children[i]))
    out.sort(key=lambda item: item[0])
    return out


class AstMutator:
    name = ''

    def sites(self, tree: AstTree, ctx: AstMutationContext) -> List[Any]:
        raise NotImplementedError

    def apply_at(self, tree: AstTree, site, rng: random.Random,
                 ctx: AstMutationContext) -> Optional[AstTree]:
        raise NotImplementedError

    def apply(self, tree: AstTree, rng: random.Random, ctx: AstMutationContext) -> Optional[AstTree]:
        sites = self.sites(tree, ctx)
        if not sites:
            return None
        return self.apply_at(tree, rng.choice(sites), rng, ctx)


class RecursiveReplace(AstMutator):
    """Nest a copy of a node inside itself, up to `recursive_budget` times.

    A site is (node path, mode) where mode is 'stmt' (insert into a block
    of the node), 'expr' (replace an operand, parenthesized) or 'type'
    (replace a template argument).
    """
    name = 'RecursiveReplace'

    def sites(self, tree, ctx):
        root = tree.root
        out = []
        for path, node in iter_with_paths(root):
            if not path:
                continue
            parent = node_at(root, path[:-1])
            index = path[-1]
            if is_statement_slot(parent, index):
                out.append((path, 'stmt'))
            elif is_expression_slot(parent, index) and not node.is_leaf:
                out.append((path, 'expr'))
            elif node.kind == NodeKind.TYPE_EXPR and len(node.children) > 1:
                out.append((path, 'type'))
        return out

    @staticmethod
    def inner_slots(node: AstNode, mode: str) -> List[Path]:
        slots = []
        for rel, inner in iter_with_paths(node):
            if not rel:
                continue
            if mode == 'stmt':
                if inner.kind == NodeKind.COMPOUND_STMT:
                    slots.append(rel)
            elif mode == 'expr':
                if is_expression_slot(node_at(node, rel[:-1]), rel[-1]):
                    slots.append(rel)
            elif inner.kind == NodeKind.TYPE_EXPR and len(rel) == 1:
                slots.append(rel)
        return slots

    def apply_at(self, tree, site, rng, ctx):
        path, mode = site
        result = tree.clone()
        original = node_at(result.root, path)
        slots = self.inner_slots(original, mode)
        if not slots:
            return None
        rel = rng.choice(slots)
        rounds = rng.randint(1, max(1, ctx.recursive_budget))
        nested = original.clone()
        for _ in range(rounds):
            outer = original.clone()
            if mode == 'stmt':
                block = node_at(outer, rel)
                at = len(block.children)
                if block.children and block.children[-1].kind == NodeKind.TOKEN and block.children[-1].text == '}':
                    at -= 1
                block.children.insert(at, nested)
            elif mode == 'expr':
                wrapped = AstNode(NodeKind.PAREN_EXPR, '', [
                    AstNode.leaf(NodeKind.TOKEN, '('), nested, AstNode.leaf(NodeKind.TOKEN, ')'),
                ])
                outer = replace_at(outer, rel, wrapped)
            else:
                outer = replace_at(outer, rel, nested)
            nested = outer
        result.root = replace_at(result.root, path, nested)
        return result

    def apply(self, tree, rng, ctx):
        sites = self.sites(tree, ctx)
        if not sites:
            return None
        for site in rng.sample(sites, min(8, len(sites))):
            out = self.apply_at(tree, site, rng, ctx)
            if out is not None:
                return out
        return None


class Delete(AstMutator):
    """Remove a node and its subtree; the parent keeps at least one child."""
    name = 'Delete'

    def sites(self, tree, ctx):
        return [path for path, _ in _paths_where(tree.root, lambda p, i: len(p.children) >= 2)] + \
            [path for path, _ in _paths_where(
                tree.root, lambda p, i: p.kind == NodeKind.TRANSLATION_UNIT and len(p.children) == 1)]

    def apply_at(self, tree, site, rng, ctx):
        result = tree.clone()
        parent = node_at(result.root, site[:-1])
        if len(parent.children) < 2 and parent is not result.root:
            return None
        parent.children.pop(site[-1])
        return result


class Replace(AstMutator):
    """Replace the text of a leaf with a dictionary token."""
    name = 'Replace'

    def sites(self, tree, ctx):
        return [path for path, node in iter_with_paths(tree.root) if node.is_leaf]

    def apply_at(self, tree, site, rng, ctx, entry: Optional[str] = None):
        result = tree.clone()
        leaf = node_at(result.root, site)
        if entry is None:
            choices = [e for e in ctx.dictionary.entries if e != leaf.text]
            if not choices:
                return None
            entry = rng.choice(choices)
        elif entry == leaf.text:
            return None
        leaf.text = entry
        leaf.kind = classify_leaf(entry)
        return result


class Splice(AstMutator):
    """Replace a node with a same-kind subtree taken from another corpus tree."""
    name = 'Splice'

    def sites(self, tree, ctx):
        if not ctx.donors:
            return []
        return [path for path, node in iter_with_paths(tree.root) if path and not node.is_leaf]

    def apply_at(self, tree, site, rng, ctx):
        result = tree.clone()
        target = node_at(result.root, site)
        candidates = []
        for donor in ctx.donors:
            for node in iter_nodes(donor.root):
                if node.kind == target.kind and node is not donor.root:
                    candidates.append(node)
        rng.shuffle(candidates)
        for node in candidates[:32]:
            if not structural_equal(node, target):
                result.root = replace_at(result.root, site, node.clone())
                return result
        return None

    def apply(self, tree, rng, ctx):
        sites = self.sites(tree, ctx)
        if not sites:
            return None
        # try a few sites: most kinds have no donor counterpart
        for site in rng.sample(sites, min(8, len(sites))):
            out = self.apply_at(tree, site, rng, ctx)
            if out is not None:
                return out
        return None


class Swap(AstMutator):
    """Exchange two distinct children of one node."""
    name = 'Swap'

    def sites(self, tree, ctx):
        return [path for path, node in iter_with_paths(tree.root) if len(node.children) >= 2]

    def apply_at(self, tree, site, rng, ctx):
        node = node_at(tree.root, site)
        pairs = [(i, j) for i in range(len(node.children)) for j in range(i + 1, len(node.children))
                 if not structural_equal(node.children[i], node.children[j])]
        if not pairs:
            return None
        i, j = rng.choice(pairs)
        result = tree.clone()
        target = node_at(result.root, site)
        target.children[i], target.children[j] = target.children[j], target.children[i]
        return result


class Identifier(AstMutator):
    """Rename one identifier occurrence to another name used in the tree."""
    name = 'Identifier'

    def sites(self, tree, ctx):
        if len(identifier_texts(tree.root)) < 2:
            return []
        return [path for path, node in iter_with_paths(tree.root) if node.kind == NodeKind.IDENTIFIER]

    def apply_at(self, tree, site, rng, ctx):
        result = tree.clone()
        leaf = node_at(result.root, site)
        candidates = sorted(t for t in identifier_texts(result.root) if t != leaf.text)
        if not candidates:
            return None
        leaf.text = rng.choice(candidates)
        return result


AST_MUTATORS = (RecursiveReplace(), Delete(), Replace(), Splice(), Swap(), Identifier())
AST_OPERATOR_NAMES = tuple(m.name for m in AST_MUTATORS)
_BY_NAME = {m.name: m for m in AST_MUTATORS}


def get_ast_mutator(name: str) -> AstMutator:
    try:
        return _BY_NAME[name]
    except KeyError:
        raise ValueError(f"unknown AST operator '{name}' (expected one of {', '.join(AST_OPERATOR_NAMES)})")


def within_caps(tree: AstTree, ctx: AstMutationContext) -> bool:
    return node_count(tree.root) <= ctx.max_nodes and tree_depth(tree.root) <= ctx.max_depth


def mutate_ast(tree: AstTree, corpus: Sequence[AstTree], rng: random.Random,
               dictionary: Optional[TokenDictionary] = None, operator: Optional[str] = None,
               strict: bool = False, ctx: Optional[AstMutationContext] = None) -> MutationResult:
    """Apply one AST mutation.

    Args:
        tree: Input tree (not modified)
        corpus: Donor trees for Splice (may be empty)
        rng: Campaign RNG
        dictionary: Tokens for Replace (default dictionary if None)
        operator: Operator to try first; random if None
        strict: Do not fall back to other operators
        ctx: Caps and budget; overrides dictionary/corpus when given

    Returns:
        MutationResult; ``applied`` is False if nothing could be applied
        within the caps.
    """
    if ctx is None:
        ctx = AstMutationContext(dictionary=dictionary or default_dictionary(), donors=corpus)
    if operator is None:
        order = list(AST_MUTATORS)
        rng.shuffle(order)
    else:
        first = get_ast_mutator(operator)
        rest = [m for m in AST_MUTATORS if m is not first]
        rng.shuffle(rest)
        order = [first] + ([] if strict else rest)

    for mutator in order:
        for _ in range(AST_MUTATION_RETRIES):
            out = mutator.apply(tree, rng, ctx)
            if out is None:
                break
            if within_caps(out, ctx):
                out.diagnostics = []
                return MutationResult(out, mutator.name, True)
    return MutationResult(tree, order[0].name if order else '', False)
