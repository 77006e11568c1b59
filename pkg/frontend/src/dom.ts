/**
 * Realize virtual nodes into the document. SVG descendants need the SVG
 * namespace; everything below an <svg> tag is created with it.
 */

import { VNode } from './vnode.js';

const SVG_NS = 'http://www.w3.org/2000/svg';

const build = (node: VNode, inSvg: boolean): Element => {
  const svg = inSvg || node.tag === 'svg';
  const el = svg
    ? document.createElementNS(SVG_NS, node.tag)
    : document.createElement(node.tag);
  for (const [key, value] of Object.entries(node.attrs)) {
    el.setAttribute(key, value);
  }
  for (const child of node.children) {
    el.append(typeof child === 'string' ? child : build(child, svg));
  }
  return el;
};

export const mount = (host: Element, node: VNode): void => {
  host.replaceChildren(build(node, false));
};
