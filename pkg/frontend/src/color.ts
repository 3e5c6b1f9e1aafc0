// One stable color per label: hash the label text, spread hues by the golden
// angle so nearby labels stay visually distinct.
export function labelColor(label: string | number): string {
  const s = String(label);
  let hash = 0;
  for (let i = 0; i < s.length; i++) {
    hash = (hash * 31 + s.charCodeAt(i)) >>> 0;
  }
  const hue = ((hash * 137.508) % 360 + 360) % 360;
  return `hsl(${hue.toFixed(1)},62%,42%)`;
}
