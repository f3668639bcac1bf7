// Fixed-scale meters-to-pixels viewport with pan and zoom.

export interface Viewport {
  scale: number;   // pixels per meter
  offsetX: number; // pixels
  offsetY: number;
  height: number;  // canvas height, for the y flip
}

export function defaultViewport(canvasWidth: number, canvasHeight: number,
                                worldWidth = 100, worldHeight = 60): Viewport {
  const scale = Math.min(canvasWidth / worldWidth, canvasHeight / worldHeight) * 0.95;
  return {
    scale,
    offsetX: (canvasWidth - worldWidth * scale) / 2,
    offsetY: (canvasHeight - worldHeight * scale) / 2,
    height: canvasHeight,
  };
}

export function toPx(vp: Viewport, x: number, y: number): [number, number] {
  return [vp.offsetX + x * vp.scale, vp.height - (vp.offsetY + y * vp.scale)];
}

export function pan(vp: Viewport, dxPx: number, dyPx: number): Viewport {
  return { ...vp, offsetX: vp.offsetX + dxPx, offsetY: vp.offsetY - dyPx };
}

export function zoom(vp: Viewport, factor: number, atX: number, atY: number): Viewport {
  const clamped = Math.min(Math.max(vp.scale * factor, 1), 80);
  // keep the world point under the cursor fixed
  const worldX = (atX - vp.offsetX) / vp.scale;
  const worldY = (vp.height - atY - vp.offsetY) / vp.scale;
  return {
    ...vp,
    scale: clamped,
    offsetX: atX - worldX * clamped,
    offsetY: vp.height - atY - worldY * clamped,
  };
}
