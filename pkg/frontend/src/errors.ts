// Map a server validation error onto the board card that caused it, by
// parsing the message shapes the API actually emits. Anything unrecognized
// falls back to a board-level banner (cardId null).

export interface CardLike {
  instanceId: string;
  plugin: string;
  section: string;
}

export interface ErrorTarget {
  cardId: string | null;
  /** Set when the message names a specific parameter field. */
  paramName?: string;
}

const STEP_RE = /^step '([^']+)' expects input kind/;
const SECTION_PLUGIN_RE = /^section '([^']+)': plugin '([^']+)'/;
const PARAM_RE = /^param ([^.\s]+)\.([^:\s]+):/;
const UNKNOWN_PARAM_RE = /^plugin ([^:]+): unknown param '([^']+)'/;
const PLUGIN_QUOTED_RE = /^plugin '([^']+)':/;
const NO_PLUGIN_RE = /^no plugin named '([^']+)'/;
const INSTANCE_ID_RE = /instance_id '([^']+)'/;

function firstWithPlugin(cards: CardLike[], plugin: string,
                         section?: string): CardLike | undefined {
  return cards.find((c) => c.plugin === plugin
    && (section === undefined || c.section === section));
}

/**
 * Resolve which card a validation error belongs to.
 *
 * `cards` must be in board order (sample, dataset, batch; top to bottom)
 * so ambiguous matches land on the step the server checked first.
 */
export function resolveErrorCard(cards: CardLike[],
                                 message: string): ErrorTarget {
  let m = STEP_RE.exec(message);
  if (m) {
    const card = cards.find((c) => c.instanceId === m![1]);
    return { cardId: card ? card.instanceId : null };
  }

  m = SECTION_PLUGIN_RE.exec(message);
  if (m) {
    const card = firstWithPlugin(cards, m[2], m[1]) ?? firstWithPlugin(cards, m[2]);
    return { cardId: card ? card.instanceId : null };
  }

  m = PARAM_RE.exec(message);
  if (m) {
    const card = firstWithPlugin(cards, m[1]);
    return { cardId: card ? card.instanceId : null, paramName: m[2] };
  }

  m = UNKNOWN_PARAM_RE.exec(message);
  if (m) {
    const card = firstWithPlugin(cards, m[1]);
    return { cardId: card ? card.instanceId : null, paramName: m[2] };
  }

  m = PLUGIN_QUOTED_RE.exec(message) ?? NO_PLUGIN_RE.exec(message);
  if (m) {
    const card = firstWithPlugin(cards, m[1]);
    return { cardId: card ? card.instanceId : null };
  }

  m = INSTANCE_ID_RE.exec(message);
  if (m) {
    const card = cards.find((c) => c.instanceId === m![1]);
    return { cardId: card ? card.instanceId : null };
  }

  return { cardId: null };
}
