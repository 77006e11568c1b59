/**
 * Minimal virtual nodes. The render core produces these instead of touching
 * the DOM so tests can snapshot whole views in node; dom.ts realizes them.
 */

export interface VNode {
  tag: string;
  attrs: Record<string, string>;
  children: Array<VNode | string>;
}

export const h = (
  tag: string,
  attrs: Record<string, string> = {},
  ...children: Array<VNode | string | null | undefined>
): VNode => ({
  tag,
  attrs,
  children: children.filter((c): c is VNode | string => c != null),
});

/** Depth-first collection of nodes matching a predicate (test helper). */
export const collect = (root: VNode, pred: (n: VNode) => boolean): VNode[] => {
  const hits: VNode[] = [];
  const walk = (node: VNode): void => {
    if (pred(node)) hits.push(node);
    for (const child of node.children) {
      if (typeof child !== 'string') walk(child);
    }
  };
  walk(root);
  return hits;
};

/** Concatenated text content of a node (test helper). */
export const textOf = (node: VNode): string =>
  node.children
    .map((c) => (typeof c === 'string' ? c : textOf(c)))
    .join('');
